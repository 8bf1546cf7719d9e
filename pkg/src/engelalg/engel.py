"""Engel-type relation instances and integer relation matrices.

The n-Engel identity enters in its signed, linearised form

    sum over sigma in Sym(n) of |sigma_odd| [b, b_{1 sigma}, ..., b_{n sigma}]

where ``|sigma_odd|`` is the sign of the permutation induced on the odd
entries.  The group-derived identity places an extra fixed element ``b``
after the first permuted slot:

    sum over sigma in Sym(5) of |sigma_odd| [a, a_{1 sigma}, b, a_{2 sigma}, ..., a_{5 sigma}]

Sums are evaluated over *distinct* arrangements of the slot multiset, with
shared prefixes multiplied once.  Permuting equal even entries leaves a
term unchanged, so the full sum is the distinct-arrangement sum times the
product of the factorials of the even multiplicities.  A repeated odd
entry makes the whole sum vanish.
"""

from __future__ import annotations

import itertools
import time
from collections import defaultdict
from dataclasses import dataclass, field
from math import factorial
from typing import Callable, Iterable, Mapping, Sequence

from .errors import BudgetExceeded, InvalidInput
from .exactla import IntMatrix
from .grassmann import permutation_sign_of_sequence, sigma_odd_sign

ENGEL, SUPER_ENGEL, GROUP = "engel", "super-engel", "group"


def permutation_terms(parities: Sequence[int]) -> list[tuple[tuple[int, ...], int]]:
    """Every permutation of the slots with its ``|sigma_odd|`` sign (before collection)."""
    n = len(parities)
    return [(perm, sigma_odd_sign(parities, perm)) for perm in itertools.permutations(range(n))]


def _key(x: Mapping[int, int]) -> frozenset:
    return frozenset(x.items())


def arrangement_sum(
    alg,
    leading: Mapping[int, int],
    slots: Sequence[Mapping[int, int]],
    fixed: Mapping[int, Mapping[int, int]] | None = None,
    *,
    full: bool = True,
    parities: Sequence[int] | None = None,
) -> dict[int, int]:
    """Signed sum of left-normed products ``[leading, ...]`` over arrangements of ``slots``.

    ``fixed`` maps a position (1-based, counted after ``leading``) to an
    element that stays put; permuted slots fill the other positions in order.
    ``alg`` needs ``mul(x, y)`` and ``parity_of(x)``.  ``parities`` overrides
    the slot parities used for the signs.
    """
    if parities is not None and len(parities) != len(slots):
        raise InvalidInput("one parity per permuted slot")
    fixed = dict(fixed or {})
    length = len(slots) + len(fixed)
    if any(not 1 <= pos <= length for pos in fixed):
        raise InvalidInput("fixed positions out of range")

    groups: dict[frozenset, list] = {}
    order: list[frozenset] = []
    for idx, s in enumerate(slots):
        if not s:
            return {}
        k = _key(s)
        if parities is not None:
            k = (k, parities[idx] % 2)
        if k not in groups:
            par = alg.parity_of(s) if parities is None else parities[idx] % 2
            if par is None:
                raise InvalidInput("slot values must be homogeneous")
            groups[k] = [dict(s), 0, par, idx]
            order.append(k)
        groups[k][1] += 1
    for k in order:
        if groups[k][2] == 1 and groups[k][1] > 1:
            return {}
    if alg.parity_of(leading) is None and leading:
        raise InvalidInput("leading value must be homogeneous")
    for v in fixed.values():
        if v and alg.parity_of(v) is None:
            raise InvalidInput("fixed values must be homogeneous")

    values = [groups[k][0] for k in order]
    counts = [groups[k][1] for k in order]
    odd_rank = [groups[k][3] if groups[k][2] == 1 else None for k in order]
    scale = 1
    if full:
        for k in order:
            if groups[k][2] == 0:
                scale *= factorial(groups[k][1])

    total: dict[int, int] = defaultdict(int)
    placed_odd: list[int] = []

    def dfs(pos, acc, sign):
        if not acc:
            return
        if pos > length:
            for key, v in acc.items():
                total[key] += sign * v
            return
        if pos in fixed:
            dfs(pos + 1, alg.mul(acc, fixed[pos]), sign)
            return
        for gi, val in enumerate(values):
            if not counts[gi]:
                continue
            s = sign
            r = odd_rank[gi]
            if r is not None and sum(1 for q in placed_odd if q > r) % 2:
                s = -s
            counts[gi] -= 1
            if r is not None:
                placed_odd.append(r)
            dfs(pos + 1, alg.mul(acc, val), s)
            if r is not None:
                placed_odd.pop()
            counts[gi] += 1

    dfs(1, dict(leading), 1)
    return {k: scale * v for k, v in total.items() if v}


def expand_super_engel(alg, leading, slots, parities=None, *, full: bool = True) -> dict[int, int]:
    """``sum_sigma |sigma_odd| [leading, slots[sigma(1)], ..., slots[sigma(n)]]``."""
    return arrangement_sum(alg, leading, slots, full=full, parities=parities)


def expand_group_identity(alg, a, slots, b, parities=None, *, full: bool = True) -> dict[int, int]:
    """``sum_sigma |sigma_odd| [a, slots[sigma(1)], b, slots[sigma(2)], ...]``."""
    if len(slots) < 1:
        raise InvalidInput("need at least one permuted slot")
    return arrangement_sum(alg, a, slots, {2: b}, full=full, parities=parities)


def brute_force_sum(alg, leading, slots, fixed=None, parities=None) -> dict[int, int]:
    """Reference evaluation over all ``n!`` permutations, one term at a time."""
    fixed = dict(fixed or {})
    if parities is None:
        parities = [alg.parity_of(s) for s in slots]
    total: dict[int, int] = defaultdict(int)
    length = len(slots) + len(fixed)
    for perm, sign in permutation_terms(parities):
        seq = iter(perm)
        acc = dict(leading)
        for pos in range(1, length + 1):
            acc = alg.mul(acc, fixed[pos] if pos in fixed else slots[next(seq)])
        for k, v in acc.items():
            total[k] += sign * v
    return {k: v for k, v in total.items() if v}


# -- slot enumeration --------------------------------------------------------------


def grade_multisets(grades: Sequence[tuple], n: int, target: tuple) -> list[tuple[tuple, ...]]:
    """Multisets of ``n`` grades (vectors, each nonzero) from ``grades`` summing to ``target``."""
    gs = sorted(set(g for g in grades if any(g)))
    out = []

    def rec(start, left, remaining, acc):
        if left == 0:
            if not any(remaining):
                out.append(tuple(acc))
            return
        if sum(remaining) < left:
            return
        for i in range(start, len(gs)):
            g = gs[i]
            if all(a <= b for a, b in zip(g, remaining)):
                acc.append(g)
                rec(i, left - 1, tuple(b - a for a, b in zip(g, remaining)), acc)
                acc.pop()

    rec(0, n, tuple(target), [])
    return out


def slot_multisets(by_grade: Mapping[tuple, Sequence[int]], n: int, target: tuple):
    """Nondecreasing index tuples of length ``n`` whose grades sum to ``target``."""
    for combo in grade_multisets(list(by_grade), n, target):
        runs = []
        for g, k in _runs(combo):
            runs.append(list(itertools.combinations_with_replacement(by_grade[g], k)))
        for choice in itertools.product(*runs):
            yield tuple(sorted(i for part in choice for i in part))


def _runs(seq):
    out = []
    for g, grp in itertools.groupby(seq):
        out.append((g, len(list(grp))))
    return out


# -- relation matrices over Z ------------------------------------------------------


@dataclass
class RelationInstance:
    source: str
    leading: int
    slots: tuple[int, ...]
    fixed: int | None
    vector: dict[int, int]


@dataclass
class RelationMatrix:
    columns: list[int]
    rows: list[dict[int, int]]  # keyed by column position
    instances: list[RelationInstance]
    provenance: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), len(self.columns))

    def matrix(self) -> IntMatrix:
        return IntMatrix.from_rows(self.rows, len(self.columns))


def _normalise_row(row: dict[int, int]) -> tuple:
    items = sorted(row.items())
    if items and items[0][1] < 0:
        items = [(k, -v) for k, v in items]
    return tuple(items)


def _basis_by_multiweight(alg, bound: tuple) -> dict[tuple, list[int]]:
    out: dict[tuple, list[int]] = defaultdict(list)
    for b in alg.basis:
        if all(m <= c for m, c in zip(b.multiweight, bound)):
            out[b.multiweight].append(b.index)
    return out


def relation_instances(
    alg,
    multiweight: Sequence[int],
    sources: Iterable[str] = (ENGEL,),
    degree: int = 5,
    *,
    full: bool = True,
    progress: Callable[[int], None] | None = None,
) -> Iterable[RelationInstance]:
    """All relation instances whose slots are basis elements and whose multiweight is ``multiweight``."""
    target = tuple(multiweight)
    by_mw = _basis_by_multiweight(alg, target)
    unit = {i: {i: 1} for idxs in by_mw.values() for i in idxs}
    sources = tuple(sources)
    count = 0
    for src in sources:
        if src not in (ENGEL, SUPER_ENGEL, GROUP):
            raise InvalidInput(f"unknown relation source {src!r}")
    for lead_mw in sorted(by_mw):
        rest = tuple(t - m for t, m in zip(target, lead_mw))
        for lead in by_mw[lead_mw]:
            if ENGEL in sources or SUPER_ENGEL in sources:
                for combo in slot_multisets(by_mw, degree, rest):
                    vec = expand_super_engel(alg, unit[lead], [unit[i] for i in combo], full=full)
                    count += 1
                    if progress and count % 1000 == 0:
                        progress(count)
                    yield RelationInstance(SUPER_ENGEL, lead, combo, None, vec)
            if GROUP in sources:
                for b_mw in sorted(by_mw):
                    rest2 = tuple(r - m for r, m in zip(rest, b_mw))
                    if any(x < 0 for x in rest2):
                        continue
                    for b in by_mw[b_mw]:
                        for combo in slot_multisets(by_mw, 5, rest2):
                            vec = expand_group_identity(alg, unit[lead], [unit[i] for i in combo], unit[b], full=full)
                            count += 1
                            yield RelationInstance(GROUP, lead, combo, b, vec)


def build_relation_matrix(
    alg,
    multiweight: Sequence[int],
    sources: Iterable[str] = (ENGEL,),
    degree: int = 5,
    *,
    provenance: dict | None = None,
    full: bool = True,
    deadline: float | None = None,
) -> RelationMatrix:
    """Integer relation matrix of one multiweight component of a (truncated) free superalgebra.

    Rows are relation instances in the coordinates of the component basis;
    zero rows and rows equal up to sign to an earlier row are dropped.
    """
    if hasattr(alg, "algebra"):  # StructureTable
        alg = alg.algebra
    target = tuple(multiweight)
    if sum(target) > alg.class_bound:
        raise InvalidInput(f"component weight {sum(target)} exceeds class bound {alg.class_bound}")
    columns = alg.component(target)
    col_of = {b: c for c, b in enumerate(columns)}
    rows, instances, seen = [], [], set()
    generated = zero = dup = 0
    before = dict(alg.diagnostics)
    for inst in relation_instances(alg, target, sources, degree, full=full):
        generated += 1
        if deadline is not None and generated % 200 == 0 and time.monotonic() > deadline:
            raise BudgetExceeded(f"relation build stopped after {generated} instances", where="relmat")
        row = {}
        for k, v in inst.vector.items():
            if k not in col_of:
                raise InvalidInput("relation instance left the target component")
            row[col_of[k]] = v
        if not row:
            zero += 1
            continue
        key = _normalise_row(row)
        if key in seen:
            dup += 1
            continue
        seen.add(key)
        rows.append(row)
        instances.append(inst)
    diag = {
        "instances": generated,
        "zero_rows": zero,
        "duplicate_rows": dup,
        "discarded_caps": alg.diagnostics.get("discarded_caps", 0) - before.get("discarded_caps", 0),
        "discarded_class": alg.diagnostics.get("discarded_class", 0) - before.get("discarded_class", 0),
    }
    prov = {"multiweight": list(target), "sources": list(sources), "degree": degree}
    prov.update(provenance or {})
    return RelationMatrix(columns, rows, instances, prov, diag)


def case_algebra(case, class_bound: int | None = None):
    """Truncated free superalgebra for a case: caps equal the target multiweight."""
    from .superalg import FreeLieSuperalgebra

    n = sum(case.target_multiweight)
    return FreeLieSuperalgebra(case.generator_parities, class_bound or n, case.target_multiweight)


def build_case_matrix(case, degree: int = 5, *, full: bool = True, deadline: float | None = None):
    alg = case_algebra(case)
    sources = [SUPER_ENGEL] + ([GROUP] if GROUP in getattr(case, "relations", ()) else [])
    prov = {"case": case.to_json() if hasattr(case, "to_json") else str(case)}
    rm = build_relation_matrix(alg, case.target_multiweight, sources, degree, provenance=prov, full=full, deadline=deadline)
    return alg, rm


def sign_of_arrangement(original: Sequence[int], arranged: Sequence[int]) -> int:
    """Sign of the permutation taking ``original`` to ``arranged`` (distinct entries)."""
    pos = {v: i for i, v in enumerate(original)}
    return permutation_sign_of_sequence([pos[v] for v in arranged])


# -- tensor oracle K (x) G ---------------------------------------------------------


class TensorAlgebra:
    """``K`` tensor a Grassmann algebra, ``K`` an ordinary Lie algebra over Z.

    Keys are ``(k, indices)`` with ``k`` a basis index of ``K`` and ``indices``
    a strictly increasing tuple of Grassmann generators;
    ``[x (x) m, y (x) n] = [x, y] (x) mn``.
    """

    def __init__(self, lie):
        self.lie = lie

    def mul(self, x, y) -> dict:
        from .grassmann import GrassmannMonomial, mul as gmul

        acc: dict = defaultdict(int)
        for (i, gi), a in x.items():
            for (j, gj), b in y.items():
                m = gmul(GrassmannMonomial(gi), GrassmannMonomial(gj))
                if m.is_zero:
                    continue
                for k, c in self.lie.product(i, j).items():
                    acc[(k, m.indices)] += a * b * c * m.coefficient
        return {k: v for k, v in acc.items() if v}

    def parity_of(self, x):
        ps = {len(g) % 2 for (_, g) in x}
        return ps.pop() if len(ps) == 1 else None


def embed_in_tensor(sup, tensor: TensorAlgebra, images: Sequence[dict]):
    """Homomorphism from the free superalgebra ``sup`` into ``tensor`` fixed by generator images."""
    memo: dict[int, dict] = {}

    def phi_basic(c) -> dict:
        if c.is_leaf:
            return dict(images[c.generator - 1])
        return tensor.mul(phi_basic(c.left), phi_basic(c.right))

    def phi_index(i: int) -> dict:
        if i not in memo:
            b = sup.basis[i]
            v = phi_basic(b.commutator)
            memo[i] = tensor.mul(v, v) if b.kind != "basic" else v
        return memo[i]

    def phi(x) -> dict:
        acc: dict = defaultdict(int)
        for i, a in x.items():
            for k, v in phi_index(i).items():
                acc[k] += a * v
        return {k: v for k, v in acc.items() if v}

    return phi
