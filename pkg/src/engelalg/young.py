"""Young diagrams, tableaux, quasi-idempotents and strip decompositions.

A diagram is cut into vertical strips (its first few columns) and
horizontal strips (the rows that remain).  Each strip becomes one generator
of a small Lie superalgebra: odd for a vertical strip, even for a
horizontal one, with the strip length as its weight in the target
multiweight.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from math import factorial
from typing import Iterator, Sequence

from .errors import Infeasible, InternalError, InvalidInput
from .grassmann import ONE, GrassmannMonomial, permutation_sign

VERTICAL, HORIZONTAL = "vertical", "horizontal"


@dataclass(frozen=True, order=True)
class Partition:
    parts: tuple[int, ...]

    def __post_init__(self):
        p = tuple(int(x) for x in self.parts)
        if not p or any(x < 1 for x in p) or any(a < b for a, b in zip(p, p[1:])):
            raise InvalidInput(f"not a partition: {self.parts!r}")
        object.__setattr__(self, "parts", p)

    @property
    def n(self) -> int:
        return sum(self.parts)

    def conjugate(self) -> "Partition":
        return Partition(tuple(sum(1 for r in self.parts if r > j) for j in range(self.parts[0])))

    def cells(self) -> list[tuple[int, int]]:
        return [(r, c) for r, m in enumerate(self.parts, 1) for c in range(1, m + 1)]

    def __str__(self):
        return "(" + ",".join(map(str, self.parts)) + ")"


def partitions(n: int) -> list[Partition]:
    """All partitions of ``n`` in reverse-lexicographic order."""
    if n < 1:
        raise InvalidInput("n must be >= 1")
    out = []

    def rec(remaining, largest, prefix):
        if remaining == 0:
            out.append(Partition(tuple(prefix)))
            return
        for k in range(min(remaining, largest), 0, -1):
            prefix.append(k)
            rec(remaining - k, k, prefix)
            prefix.pop()

    rec(n, n, [])
    return out


# -- strips ------------------------------------------------------------------


@dataclass(frozen=True)
class Strip:
    orientation: str
    length: int
    cells: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class StripDecomposition:
    shape: Partition
    strips: tuple[Strip, ...]

    @property
    def vertical_count(self) -> int:
        return sum(s.orientation == VERTICAL for s in self.strips)

    def to_json(self) -> dict:
        return {
            "partition": list(self.shape.parts),
            "strips": [
                {"orientation": s.orientation, "length": s.length, "cells": [list(c) for c in s.cells]}
                for s in self.strips
            ],
        }


def _peel(shape: Partition, j: int) -> StripDecomposition:
    cols = shape.conjugate().parts
    strips = []
    for c in range(1, j + 1):
        strips.append(Strip(VERTICAL, cols[c - 1], tuple((r, c) for r in range(1, cols[c - 1] + 1))))
    for r, m in enumerate(shape.parts, 1):
        if m > j:
            strips.append(Strip(HORIZONTAL, m - j, tuple((r, c) for c in range(j + 1, m + 1))))
    return StripDecomposition(shape, tuple(strips))


def strip_decompose(shape, max_strips: int = 4) -> StripDecomposition:
    """Peel the first ``j`` columns as vertical strips; remaining rows are horizontal.

    ``j`` minimises the strip count, ties going to fewer vertical strips.
    """
    if not isinstance(shape, Partition):
        shape = Partition(tuple(shape))
    ncols = shape.parts[0]
    options = [_peel(shape, j) for j in range(ncols + 1)]
    best = min(options, key=lambda d: (len(d.strips), d.vertical_count))
    if len(best.strips) > max_strips:
        raise Infeasible(f"{shape} needs {len(best.strips)} strips (budget {max_strips})")
    return best


# -- tableaux and idempotents -----------------------------------------------


@dataclass(frozen=True)
class YoungTableau:
    shape: Partition
    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if tuple(len(r) for r in self.rows) != self.shape.parts:
            raise InvalidInput("row lengths must match the shape")
        entries = sorted(x for r in self.rows for x in r)
        if entries != list(range(1, self.shape.n + 1)):
            raise InvalidInput("filling must be a bijection onto 1..n")

    def columns(self) -> list[tuple[int, ...]]:
        return [tuple(r[j] for r in self.rows if len(r) > j) for j in range(len(self.rows[0]))]

    def is_standard(self) -> bool:
        rows_ok = all(all(a < b for a, b in zip(r, r[1:])) for r in self.rows)
        cols_ok = all(all(a < b for a, b in zip(c, c[1:])) for c in self.columns())
        return rows_ok and cols_ok


def standard_tableaux(shape) -> Iterator[YoungTableau]:
    if not isinstance(shape, Partition):
        shape = Partition(tuple(shape))
    n = shape.n
    parts = shape.parts

    def rec(k, rows):
        if k > n:
            yield YoungTableau(shape, tuple(tuple(r) for r in rows))
            return
        for i, r in enumerate(rows):
            if len(r) < parts[i] and (i == 0 or len(rows[i - 1]) > len(r)):
                r.append(k)
                yield from rec(k + 1, rows)
                r.pop()

    yield from rec(1, [[] for _ in parts])


Perm = tuple[int, ...]


def compose(p: Perm, q: Perm) -> Perm:
    """Apply ``p`` first, then ``q`` (right actions)."""
    return tuple(q[x] for x in p)


def _subgroup(blocks: Sequence[Sequence[int]], n: int) -> list[Perm]:
    """Direct product of the symmetric groups on ``blocks`` (0-based points)."""
    out = []
    for choice in itertools.product(*[itertools.permutations(b) for b in blocks]):
        img = list(range(n))
        for b, perm in zip(blocks, choice):
            for src, dst in zip(b, perm):
                img[src] = dst
        out.append(tuple(img))
    return out


def group_ring_mul(x: dict, y: dict) -> dict:
    out: dict = defaultdict(int)
    for p, a in x.items():
        for q, b in y.items():
            out[compose(p, q)] += a * b
    return {k: v for k, v in out.items() if v}


def idempotent(t: YoungTableau) -> tuple[dict[Perm, int], int]:
    """``e = sum sign(pi) pi rho`` over column group V and row group H, with ``e*e = k*e``."""
    n = t.shape.n
    cols = [[x - 1 for x in c] for c in t.columns()]
    rows = [[x - 1 for x in r] for r in t.rows]
    V = _subgroup(cols, n)
    H = _subgroup(rows, n)
    e: dict[Perm, int] = defaultdict(int)
    for pi in V:
        s = permutation_sign(pi)
        for rho in H:
            e[compose(pi, rho)] += s
    e = {k: v for k, v in e.items() if v}
    sq = group_ring_mul(e, e)
    ident = tuple(range(n))
    k = sq.get(ident, 0) // e.get(ident, 1) if ident in e else 0
    if k == 0 or any(sq.get(p, 0) != k * c for p, c in e.items()) or len(sq) != len(e):
        raise InternalError(f"e*e is not a multiple of e for {t}")
    return e, k


# -- case specifications -----------------------------------------------------

TARGETS = {
    "engel5-main": 12,
    "char11-step1": 8,
    "char11-step2": 10,
    "group-engel5": 12,
}

# weight of the letter outside the symmetrised set, per target
_EXTRA_WEIGHT = {"char11-step1": 4, "char11-step2": 2}


@dataclass
class CaseSpec:
    generator_parities: tuple[int, ...]
    target_multiweight: tuple[int, ...]
    grassmann_embedding: tuple[tuple[tuple[int, GrassmannMonomial], ...], ...]
    source_diagrams: list[Partition] = field(default_factory=list)
    target: str = "engel5-main"
    relations: tuple[str, ...] = ("engel",)
    notes: tuple[str, ...] = ()

    @property
    def key(self) -> tuple:
        return (self.generator_parities, self.target_multiweight)

    @property
    def n(self) -> int:
        return sum(self.target_multiweight)

    @property
    def name(self) -> str:
        par = "".join("o" if p else "e" for p in self.generator_parities)
        mw = "-".join(map(str, self.target_multiweight))
        return f"{par}_{mw}"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "target": self.target,
            "parities": ["odd" if p else "even" for p in self.generator_parities],
            "multiweight": list(self.target_multiweight),
            "relations": list(self.relations),
            "grassmann_embedding": [
                [{"slot": s, "monomial": str(m)} for s, m in gen] for gen in self.grassmann_embedding
            ],
            "covered_diagrams": [list(p.parts) for p in self.source_diagrams],
            "notes": list(self.notes),
        }


def case_from_shape(shape, target: str = "engel5-main", extra_weight: int | None = None) -> CaseSpec:
    dec = strip_decompose(shape, max_strips=4 if extra_weight is None else 3)
    parities = []
    weights = []
    embedding = []
    e_next = 1
    slot = 1
    for s in dec.strips:
        odd = s.orientation == VERTICAL
        parities.append(1 if odd else 0)
        weights.append(s.length)
        summands = []
        for _ in range(s.length):
            if odd:
                mono = GrassmannMonomial((e_next,))
                e_next += 1
            else:
                mono = GrassmannMonomial((e_next, e_next + 1))
                e_next += 2
            summands.append((slot, mono))
            slot += 1
        embedding.append(tuple(summands))
    notes = ()
    if extra_weight is not None:
        parities.append(0)
        weights.append(extra_weight)
        embedding.append(((slot, ONE),))
        notes = (f"letter of weight {extra_weight} kept outside the symmetrised cells as an even generator",)
    relations = ("engel", "group") if target == "group-engel5" else ("engel",)
    return CaseSpec(
        tuple(parities), tuple(weights), tuple(embedding), [dec.shape], target, relations, notes
    )


def cases_for(n: int, target: str) -> list[CaseSpec]:
    if TARGETS.get(target) != n:
        raise InvalidInput(f"unsupported combination n={n}, target={target!r}")
    extra = _EXTRA_WEIGHT.get(target)
    merged: dict[tuple, CaseSpec] = {}
    for shape in partitions(n):
        if target == "char11-step2" and shape.parts[0] > 3:
            continue
        case = case_from_shape(shape, target, extra)
        if case.key in merged:
            merged[case.key].source_diagrams.append(shape)
        else:
            merged[case.key] = case
    return list(merged.values())


def idempotent_check(n: int) -> list[dict]:
    """``k`` for every standard tableau on ``n`` cells, checking ``k | n!``."""
    out = []
    for shape in partitions(n):
        for t in standard_tableaux(shape):
            _, k = idempotent(t)
            out.append({"tableau": [list(r) for r in t.rows], "k": k, "divides": factorial(n) % k == 0})
    return out
