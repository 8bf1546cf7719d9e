"""Command-line front end.

Exit status: 0 success, 1 domain error, 2 resource budget exceeded, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import campaign as camp
from .engel import ENGEL, GROUP, SUPER_ENGEL, build_relation_matrix
from .errors import BudgetExceeded, Infeasible, InternalError, InvalidInput
from .exactla import (
    DEFAULT_SNF_BUDGET,
    certify_full_rank_random,
    certify_gfp,
    certify_snf,
    read_matrix,
    smallest_prime_outside,
    write_matrix,
)
from .freelie import make_generators
from .nilquot import Presentation, parse_relation, run, verify
from .superalg import FreeLieSuperalgebra
from .young import TARGETS, cases_for, idempotent_check, partitions, strip_decompose

EXIT_OK, EXIT_DOMAIN, EXIT_RESOURCE, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _parities(args) -> str:
    if args.parities:
        return args.parities
    if args.gens:
        return "e" * args.gens
    raise UsageError("give --parities or --gens")


def _emit(obj, out: str | None = None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_basis(args) -> int:
    par = _parities(args)
    alg = FreeLieSuperalgebra(make_generators(par), args.cls, args.caps)
    if args.table:
        from .superalg import build_structure_table

        sys.stdout.write(build_structure_table(make_generators(par), args.cls, args.caps).dump())
        return EXIT_OK
    out = {"parities": par, "class": args.cls, "caps": list(args.caps) if args.caps else None, "dimensions": alg.dimensions()}
    if args.list:
        out["basis"] = [
            {
                "index": b.index,
                "weight": b.weight,
                "multiweight": list(b.multiweight),
                "parity": "odd" if b.parity else "even",
                "bracket": alg.element_string(b.index),
            }
            for b in alg.basis
        ]
    _emit(out, args.output)
    return EXIT_OK


def cmd_young(args) -> int:
    if args.young_cmd == "list":
        _emit({"n": args.n, "count": len(ps := partitions(args.n)), "partitions": [list(p.parts) for p in ps]}, args.output)
    elif args.young_cmd == "decompose":
        _emit(strip_decompose(args.partition, args.max_strips).to_json(), args.output)
    elif args.young_cmd == "cases":
        n = args.n if args.n is not None else TARGETS.get(args.target)
        cs = cases_for(n, args.target)
        _emit({"n": n, "target": args.target, "count": len(cs), "cases": [c.to_json() for c in cs]}, args.output)
    else:
        res = idempotent_check(args.n)
        _emit({"n": args.n, "tableaux": len(res), "all_divide": all(r["divides"] for r in res), "results": res}, args.output)
    return EXIT_OK


def cmd_relmat(args) -> int:
    mw = args.multiweight
    if len(mw) != len(args.parities):
        raise InvalidInput("multiweight needs one entry per generator")
    alg = FreeLieSuperalgebra(make_generators(args.parities), args.cls or sum(mw), mw)
    rm = build_relation_matrix(alg, mw, args.sources, args.degree)
    m = rm.matrix()
    if args.matrix:
        write_matrix(m, args.matrix)
    _emit(
        {
            "parities": args.parities,
            "multiweight": list(mw),
            "rows": m.rows,
            "cols": m.cols,
            "columns": [alg.element_string(c) for c in rm.columns],
            "provenance": rm.provenance,
            "diagnostics": rm.diagnostics,
            "matrix_file": args.matrix,
        },
        args.output,
    )
    return EXIT_OK


def cmd_certify(args) -> int:
    m = read_matrix(args.file)
    if args.method == "smith":
        cert = certify_snf(m, args.exclude, args.budget)
    elif args.method == "random-det-gcd":
        deadline = None if args.time_budget is None else time.monotonic() + args.time_budget
        cert = certify_full_rank_random(m, args.exclude, args.samples, args.seed, deadline=deadline)
    else:
        cert = certify_gfp(m, args.p or smallest_prime_outside(args.exclude))
    _emit(cert.to_json(), args.output)
    return EXIT_OK


def cmd_nilquot(args) -> int:
    par = _parities(args)
    rels = tuple(parse_relation(r) for r in args.relation)
    pres = Presentation.preset(
        args.preset,
        len(par),
        args.p,
        args.max_class,
        tuple(par),
        relations=rels,
        caps=args.caps,
        consistency=args.consistency,
    )
    log = (lambda s: print(s, file=sys.stderr)) if args.verbose else None
    q = run(pres, time_budget=args.time_budget, log=log)
    report = {"presentation": {"preset": args.preset, **pres.describe()}, **q.report()}
    if args.verify:
        report["verification"] = verify(q, pres, triples=args.verify, engel=max(1, args.verify // 10), seed=args.seed)
    if args.dump:
        Path(args.dump).write_text(q.dump())
        report["dump"] = args.dump
    _emit(report, args.output)
    return EXIT_RESOURCE if q.terminated == "budget" else EXIT_OK


def cmd_campaign(args) -> int:
    cfg = camp.CampaignConfig(
        target=args.target,
        exclude_primes=args.exclude,
        methods=tuple(args.methods.split(",")),
        snf_budget=args.snf_budget,
        samples=args.samples,
        seed=args.seed,
        time_budget=args.time_budget,
        memory_budget=args.memory_budget,
        out_dir=Path(args.out) if args.out else camp.default_out_dir(),
        workers=args.workers,
        only=tuple(x for x in args.only.split(",") if x) if args.only else (),
        limit=args.limit,
    )
    log = (lambda s: print(s, file=sys.stderr)) if args.verbose else None
    report = camp.run_campaign(cfg, log=log)
    _emit(report["verdict"], args.output)
    budget_hit = any("budget" in r.get("reason", "") for r in report["records"])
    return EXIT_RESOURCE if budget_hit else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="engelalg", description="Engel identities in free Lie (super)algebras: bases, relation matrices, certificates, nilpotent quotients.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("-o", "--output", help="write JSON here instead of standard output")

    b = sub.add_parser("basis", help="basic commutators and dimensions of a free Lie superalgebra")
    b.add_argument("--parities", help="generator parities, e.g. eeo")
    b.add_argument("--gens", type=int, help="number of even generators")
    b.add_argument("--class", dest="cls", type=int, required=True)
    b.add_argument("--caps", type=_ints)
    b.add_argument("--list", action="store_true", help="include the basis elements")
    b.add_argument("--table", action="store_true", help="print the structure table in text form")
    common(b)
    b.set_defaults(func=cmd_basis)

    y = sub.add_parser("young", help="partitions, strip decompositions, cases, idempotents")
    ysub = y.add_subparsers(dest="young_cmd", required=True, parser_class=_Parser)
    yl = ysub.add_parser("list")
    yl.add_argument("--n", type=int, required=True)
    yd = ysub.add_parser("decompose")
    yd.add_argument("partition", type=_ints)
    yd.add_argument("--max-strips", type=int, default=4)
    yc = ysub.add_parser("cases")
    yc.add_argument("--target", choices=sorted(TARGETS), default="engel5-main")
    yc.add_argument("--n", type=int)
    yi = ysub.add_parser("idempotents")
    yi.add_argument("--n", type=int, required=True)
    for sp in (yl, yd, yc, yi):
        common(sp)
    y.set_defaults(func=cmd_young)

    r = sub.add_parser("relmat", help="integer relation matrix of one multiweight component")
    r.add_argument("--parities", required=True)
    r.add_argument("--multiweight", type=_ints, required=True)
    r.add_argument("--sources", type=lambda s: tuple(s.split(",")), default=(SUPER_ENGEL,),
                   help=f"comma list from {ENGEL},{SUPER_ENGEL},{GROUP}")
    r.add_argument("--degree", type=int, default=5)
    r.add_argument("--class", dest="cls", type=int)
    r.add_argument("--matrix", help="write the matrix in text format here")
    common(r)
    r.set_defaults(func=cmd_relmat)

    c = sub.add_parser("certify", help="rank certificate for a matrix file")
    c.add_argument("file")
    c.add_argument("--method", choices=["smith", "random-det-gcd", "gfp-rank"], default="random-det-gcd")
    c.add_argument("--exclude", type=_ints, default=(2, 3, 5, 7))
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--samples", type=int, default=3)
    c.add_argument("--p", type=int, help="prime for gfp-rank")
    c.add_argument("--budget", type=int, default=DEFAULT_SNF_BUDGET, help="Smith form size budget (rows*cols)")
    c.add_argument("--time-budget", type=float, help="seconds allowed for random-det-gcd determinants")
    common(c)
    c.set_defaults(func=cmd_certify)

    n = sub.add_parser("nilquot", help="nilpotent quotient over GF(p)")
    n.add_argument("--preset", default="free", help="free, engelN or group-engel5")
    n.add_argument("--gens", type=int)
    n.add_argument("--parities")
    n.add_argument("--p", type=int, required=True)
    n.add_argument("--max-class", type=int, default=12)
    n.add_argument("--caps", type=_ints)
    n.add_argument("--relation", action="append", default=[], help="extra homogeneous relation, e.g. '[b,a,a,a]'")
    n.add_argument("--consistency", choices=["overlaps", "full"], default="overlaps")
    n.add_argument("--time-budget", type=float)
    n.add_argument("--verify", type=int, default=0, help="random Jacobi triples to spot-check")
    n.add_argument("--seed", type=int, default=0)
    n.add_argument("--dump", help="write basis and structure constants here")
    n.add_argument("-v", "--verbose", action="store_true")
    common(n)
    n.set_defaults(func=cmd_nilquot)

    k = sub.add_parser("campaign", help="build and certify every case of a target")
    k.add_argument("--target", choices=sorted(camp.TARGET_GROUPS), default="engel5-main")
    k.add_argument("--exclude", type=_ints, default=(2, 3, 5, 7))
    k.add_argument("--methods", default=",".join(camp.METHODS))
    k.add_argument("--snf-budget", type=int, default=DEFAULT_SNF_BUDGET)
    k.add_argument("--samples", type=int, default=3)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--time-budget", type=float, help="seconds per case")
    k.add_argument("--memory-budget", type=int, help="MiB per worker process")
    k.add_argument("--out", help=f"output directory (default ${camp.ENV_OUT} or ./campaign-out)")
    k.add_argument("--workers", type=int, default=1)
    k.add_argument("--only", help="comma list of case names")
    k.add_argument("--limit", type=int)
    k.add_argument("-v", "--verbose", action="store_true")
    common(k)
    k.set_defaults(func=cmd_campaign)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"engelalg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BudgetExceeded, MemoryError) as exc:
        print(f"engelalg: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (InvalidInput, Infeasible, InternalError, OSError) as exc:
        print(f"engelalg: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
