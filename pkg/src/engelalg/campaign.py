"""Resumable certification campaign over the strip-decomposition cases.

Each case gets its own directory holding the case description, the relation
matrix, the certificate and a final ``record.json``.  A case whose record
exists and carries the same configuration fingerprint is not recomputed, so
an interrupted campaign resumes where it stopped and produces the same
``report.json``.  Wall-clock timings go to ``timings.json`` only.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .engel import build_case_matrix
from .errors import BudgetExceeded, InvalidInput
from .exactla import (
    DEFAULT_SNF_BUDGET,
    RankCertificate,
    certify_full_rank_random,
    certify_snf,
    write_matrix,
)
from .young import TARGETS, cases_for

ENV_OUT = "ENGELALG_OUT"
TARGET_GROUPS = {
    "engel5-main": ("engel5-main",),
    "char11": ("char11-step1", "char11-step2"),
    "group-engel5": ("group-engel5",),
}
METHODS = ("smith", "random-det-gcd")
ASSUMPTIONS = {
    "group-engel5": "relations used: the linearised 5-Engel identity and the group-derived identity with b in the third "
    "position; no other group-commutator consequences",
}


def default_out_dir() -> Path:
    return Path(os.environ.get(ENV_OUT, "campaign-out"))


@dataclass
class CampaignConfig:
    target: str
    exclude_primes: tuple[int, ...] = (2, 3, 5, 7)
    methods: tuple[str, ...] = METHODS
    snf_budget: int = DEFAULT_SNF_BUDGET
    samples: int = 3
    seed: int = 0
    time_budget: float | None = None  # seconds per case, build and certification together
    memory_budget: int | None = None  # MiB per worker process
    out_dir: Path = field(default_factory=default_out_dir)
    workers: int = 1
    only: tuple[str, ...] = ()
    limit: int | None = None
    degree: int = 5

    def __post_init__(self):
        if self.target not in TARGET_GROUPS:
            raise InvalidInput(f"unknown target {self.target!r}; choose from {sorted(TARGET_GROUPS)}")
        self.exclude_primes = tuple(sorted(set(int(p) for p in self.exclude_primes)))
        if self.target in ("engel5-main", "group-engel5") and not self.exclude_primes:
            raise InvalidInput("exclude_primes must be nonempty for 5-Engel targets")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise InvalidInput(f"unknown certification methods {bad}")
        for name in ("snf_budget", "time_budget", "memory_budget", "workers", "samples"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise InvalidInput(f"{name} must be positive")
        if not 2 <= self.samples <= 5:
            raise InvalidInput("samples must be between 2 and 5")
        self.out_dir = Path(self.out_dir)

    def fingerprint(self) -> dict:
        """The settings that determine the mathematical content of a record."""
        return {
            "target": self.target,
            "exclude_primes": list(self.exclude_primes),
            "methods": list(self.methods),
            "snf_budget": self.snf_budget,
            "samples": self.samples,
            "seed": self.seed,
            "degree": self.degree,
        }


def campaign_cases(config: CampaignConfig):
    out = []
    for t in TARGET_GROUPS[config.target]:
        out.extend(cases_for(TARGETS[t], t))
    if config.only:
        names = set(config.only)
        unknown = names - {c.name for c in out}
        if unknown:
            raise InvalidInput(f"no such cases: {sorted(unknown)}")
        out = [c for c in out if c.name in names]
    if config.limit is not None:
        out = out[: config.limit]
    return out


def case_dir_name(case) -> str:
    return f"{case.target}__{case.name}"


def case_seed(seed: int, case) -> int:
    h = hashlib.sha256(f"{seed}:{case.target}:{case.name}".encode()).digest()
    return int.from_bytes(h[:8], "big")


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _certify(m, config: CampaignConfig, seed: int, deadline: float | None = None) -> tuple[RankCertificate | None, list[str]]:
    trail = []
    for method in config.methods:
        if method == "smith":
            try:
                return certify_snf(m, config.exclude_primes, config.snf_budget), trail
            except BudgetExceeded:
                trail.append("smith: budget exceeded")
        else:
            if m.rows < m.cols:
                cert = RankCertificate("random-det-gcd", m.rows, m.cols, "rank-deficient", list(config.exclude_primes), seed=seed)
                cert.rank = m.rows
                return cert, trail + ["fewer rows than columns"]
            return certify_full_rank_random(m, config.exclude_primes, config.samples, seed, deadline=deadline), trail
    return None, trail


def run_case(case, config: CampaignConfig) -> tuple[dict, dict]:
    """Build and certify one case, writing its files; returns (record, timing)."""
    d = config.out_dir / case_dir_name(case)
    d.mkdir(parents=True, exist_ok=True)
    rec_path = d / "record.json"
    fp = config.fingerprint()
    if rec_path.exists():
        old = json.loads(rec_path.read_text())
        if old.get("fingerprint") == fp and old.get("status") == "complete":
            return old, {"case": case.name, "target": case.target, "resumed": True}
    _write_atomic(d / "case.json", _dumps(case.to_json()))
    t0 = time.monotonic()
    deadline = None if config.time_budget is None else t0 + config.time_budget
    record = {"case": case.to_json(), "directory": d.name, "fingerprint": fp}
    timing = {"case": case.name, "target": case.target, "resumed": False}
    try:
        _, rm = build_case_matrix(case, config.degree, deadline=deadline)
        m = rm.matrix()
        write_matrix(m, d / "matrix.mat")
        timing["build_seconds"] = round(time.monotonic() - t0, 3)
        record["matrix"] = {
            "file": "matrix.mat",
            "rows": m.rows,
            "cols": m.cols,
            "sha256": hashlib.sha256((d / "matrix.mat").read_bytes()).hexdigest(),
            "diagnostics": rm.diagnostics,
        }
        t1 = time.monotonic()
        cert, trail = _certify(m, config, case_seed(config.seed, case), deadline)
        timing["certify_seconds"] = round(time.monotonic() - t1, 3)
        record["certification_trail"] = trail
        if cert is None:
            record.update(status="incomplete", reason="every certification method exceeded its budget")
        else:
            _write_atomic(d / "certificate.json", _dumps(cert.to_json()))
            record["certificate"] = cert.to_json()
            if cert.status == "inconclusive":
                record.update(status="incomplete", reason="rank over the probe prime below the column count")
            else:
                record["status"] = "complete"
    except BudgetExceeded as exc:
        record.update(status="incomplete", reason=f"time budget exceeded: {exc}")
    except MemoryError:
        record.update(status="incomplete", reason="memory budget exceeded")
    timing["seconds"] = round(time.monotonic() - t0, 3)
    _write_atomic(rec_path, _dumps(record))
    return record, timing


def verdict(records: list[dict], exclude: tuple[int, ...]) -> dict:
    """Overall conclusion, derived from the per-case records alone."""
    incomplete = [r["directory"] for r in records if r.get("status") != "complete"]
    deficient = [
        r["directory"]
        for r in records
        if r.get("status") == "complete" and r["certificate"]["status"] == "rank-deficient"
    ]
    exceptions: dict[str, list] = {}
    unfactored = []
    for r in records:
        if r.get("status") != "complete" or r["certificate"]["status"] != "full-rank":
            continue
        cert = r["certificate"]
        for q, rank in cert["prime_exceptions"].items():
            if rank < cert["cols"]:
                exceptions.setdefault(q, []).append({"case": r["directory"], "rank": rank, "cols": cert["cols"]})
        if cert["unfactored"] != "1":
            unfactored.append({"case": r["directory"], "cofactor": cert["unfactored"]})
    excl = sorted(exclude)
    scope = "p > 7" if excl == [2, 3, 5, 7] else f"p not in {excl}"
    out = {"cases": len(records), "exclude": excl}
    if incomplete or deficient:
        out.update(status="incomplete", incomplete_cases=incomplete, rank_deficient_cases=deficient)
    elif exceptions or unfactored:
        out.update(
            status="complete-with-exceptions",
            statement=f"all components vanish for {scope} apart from the listed primes",
            exceptional_primes=dict(sorted(exceptions.items(), key=lambda kv: int(kv[0]))),
            unfactored=unfactored,
        )
    else:
        out.update(status="complete", statement=f"all components vanish for {scope}")
    return out


def _limit_memory(mib: int | None) -> None:
    if mib:
        import resource

        resource.setrlimit(resource.RLIMIT_AS, (mib * 2**20, mib * 2**20))


def _run_case_safe(args):
    case, config = args
    return run_case(case, config)


def run_campaign(config: CampaignConfig, log=None) -> dict:
    cases = campaign_cases(config)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(c, config) for c in cases]
    if config.workers > 1 or config.memory_budget:
        with ProcessPoolExecutor(config.workers, initializer=_limit_memory, initargs=(config.memory_budget,)) as ex:
            results = list(ex.map(_run_case_safe, jobs))
    else:
        results = []
        for job in jobs:
            results.append(_run_case_safe(job))
            if log:
                r = results[-1][0]
                log(f"{r['directory']}: {r.get('status')}")
    records = [r for r, _ in results]
    report = {
        "target": config.target,
        "config": config.fingerprint(),
        "assumptions": [ASSUMPTIONS[config.target]] if config.target in ASSUMPTIONS else [],
        "records": records,
        "verdict": verdict(records, config.exclude_primes),
    }
    _write_atomic(config.out_dir / "report.json", _dumps(report))
    _write_atomic(config.out_dir / "timings.json", _dumps([t for _, t in results]))
    return report
