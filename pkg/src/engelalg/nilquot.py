"""Nilpotent quotients of graded Lie (super)algebras over GF(p).

Works one class at a time.  For a class-``c`` quotient with basis layers
``L_1, ..., L_c`` the cover of the next layer is spanned by tails
``t(x, g)`` for ``x`` in ``L_c`` and ``g`` a generator.  Every product of
weight ``c + 1`` is expressed in tails through the definitions of the right
factor,

    P(u, [v, g]) = P([u, v], g) - (-1)^{|v||g|} P([u, g], v),

then antisymmetry, Jacobi and the relation instances of weight ``c + 1`` are
echelonised per multiweight.  Tails that are not pivots survive as the new
basis layer, each defined as ``[x, g]``.
"""

from __future__ import annotations

import re
import time
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .engel import arrangement_sum, slot_multisets
from .errors import BudgetExceeded, InternalError, InvalidInput
from .exactla import ModpEchelon, _check_prime
from .freelie import make_generators, normalize_tree, parse_bracket, tree_multiweight

_PRESET = re.compile(r"^(free|engel(\d+)|group-engel5)$")


def _sgn(a: int, b: int) -> int:
    return -1 if a & b & 1 else 1


@dataclass(frozen=True)
class Presentation:
    parities: tuple[int, ...]
    p: int
    max_class: int = 12
    engel: int | None = None
    group_identity: bool = False
    relations: tuple = ()  # each relation: tuple of (coefficient, tree over 1-based generator indices)
    caps: tuple[int, ...] | None = None
    consistency: str = "overlaps"
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        gens = make_generators(self.parities, list(self.labels) or None)
        object.__setattr__(self, "parities", tuple(g.parity for g in gens))
        object.__setattr__(self, "labels", tuple(g.label for g in gens))
        _check_prime(self.p)
        if self.max_class < 1:
            raise InvalidInput("max_class must be positive")
        if self.engel is not None and self.engel < 1:
            raise InvalidInput("Engel degree must be positive")
        if self.caps is not None and len(self.caps) != len(self.parities):
            raise InvalidInput("caps must have one entry per generator")
        if self.consistency not in ("overlaps", "full"):
            raise InvalidInput("consistency is 'overlaps' or 'full'")
        k = len(self.parities)
        rels = []
        for rel in self.relations:
            terms = []
            weights = set()
            for coeff, tree in rel:
                t = normalize_tree(tree, gens)
                weights.add(tree_multiweight(t, k))
                terms.append((int(coeff), t))
            if len(weights) > 1:
                raise InvalidInput("explicit relations must be multihomogeneous")
            rels.append(tuple(terms))
        object.__setattr__(self, "relations", tuple(rels))

    @property
    def rank(self) -> int:
        return len(self.parities)

    @classmethod
    def preset(cls, name: str, gens: int = 2, p: int = 11, max_class: int = 12, parities=None, **kw):
        m = _PRESET.match(name)
        if not m:
            raise InvalidInput(f"unknown preset {name!r}")
        if parities is None:
            parities = (0,) * gens
        elif len(parities) != gens:
            raise InvalidInput("parities must match the generator count")
        if m.group(1) == "free":
            return cls(tuple(parities), p, max_class, **kw)
        if m.group(1) == "group-engel5":
            return cls(tuple(parities), p, max_class, engel=5, group_identity=True, **kw)
        return cls(tuple(parities), p, max_class, engel=int(m.group(2)), **kw)

    def describe(self) -> dict:
        return {
            "parities": ["odd" if x else "even" for x in self.parities],
            "p": self.p,
            "max_class": self.max_class,
            "engel": self.engel,
            "group_identity": self.group_identity,
            "relations": len(self.relations),
            "caps": list(self.caps) if self.caps else None,
            "consistency": self.consistency,
        }


def parse_relation(text: str) -> tuple:
    """``"[b,a,a,a] - 2*[a,b,b]"`` into ``((1, tree), (-2, tree))``."""
    terms, pos, s = [], 0, text.strip()
    if not s or s.count("[") != s.count("]"):
        raise InvalidInput(f"cannot parse relation {text!r}")
    while pos < len(s):
        sign, rest = 1, s[pos:].lstrip()
        pos = len(s) - len(rest)
        if rest[0] in "+-":
            sign = -1 if rest[0] == "-" else 1
            pos += 1
            rest = s[pos:].lstrip()
            pos = len(s) - len(rest)
        m = re.match(r"(\d+)\s*\*?\s*", rest)
        coeff = 1
        if m:
            coeff = int(m.group(1))
            pos += m.end()
            rest = s[pos:]
        if not rest.startswith("["):
            raise InvalidInput(f"cannot parse relation {text!r}")
        depth, end = 0, 0
        for end, ch in enumerate(rest):
            depth += ch == "["
            depth -= ch == "]"
            if depth == 0:
                break
        terms.append((sign * coeff, parse_bracket(rest[: end + 1])))
        pos += end + 1
        while pos < len(s) and s[pos] == " ":
            pos += 1
    return tuple(terms)


@dataclass
class Element:
    weight: int
    multiweight: tuple[int, ...]
    parity: int
    definition: tuple[int, int] | None  # (left basis index, generator basis index)


@dataclass
class GradedQuotient:
    p: int
    parities: tuple[int, ...]
    labels: tuple[str, ...]
    caps: tuple[int, ...] | None
    elements: list[Element]
    table: dict[tuple[int, int], dict[int, int]]
    cls: int
    terminated: str | None = None
    history: list[dict] = field(default_factory=list)

    @property
    def layers(self) -> list[list[int]]:
        out = [[] for _ in range(self.cls)]
        for i, e in enumerate(self.elements):
            out[e.weight - 1].append(i)
        return out

    @property
    def dimensions(self) -> list[int]:
        return [len(x) for x in self.layers]

    @property
    def nilpotency_class(self) -> int:
        """Class of the quotient as computed: the last nonzero layer."""
        dims = self.dimensions
        while dims and dims[-1] == 0:
            dims.pop()
        return len(dims)

    def parity_of(self, x: Mapping[int, int]):
        ps = {self.elements[k].parity for k in x}
        return ps.pop() if len(ps) == 1 else None

    def product(self, i: int, j: int) -> dict[int, int]:
        if self.elements[i].weight + self.elements[j].weight > self.cls:
            return {}
        return self.table.get((i, j), {})

    def mul(self, x: Mapping[int, int], y: Mapping[int, int]) -> dict[int, int]:
        """Bracket inside the quotient; products above the computed class are dropped."""
        p = self.p
        acc: dict[int, int] = defaultdict(int)
        for i, a in x.items():
            for j, b in y.items():
                for k, c in self.product(i, j).items():
                    acc[k] += a * b * c
        return {k: v % p for k, v in acc.items() if v % p}

    def element_string(self, i: int) -> str:
        e = self.elements[i]
        if e.definition is None:
            return self.labels[i]
        left, g = e.definition
        inner = self.element_string(left)
        if inner.startswith("["):
            return inner[:-1] + "," + self.labels[g] + "]"
        return f"[{inner},{self.labels[g]}]"

    def components(self, weight: int) -> dict[tuple, int]:
        c: Counter = Counter(self.elements[i].multiweight for i in self.layers[weight - 1])
        return dict(sorted(c.items()))

    def report(self) -> dict:
        return {
            "p": self.p,
            "parities": ["odd" if x else "even" for x in self.parities],
            "class": self.nilpotency_class,
            "computed_to": self.cls,
            "terminated": self.terminated,
            "dimensions": self.dimensions,
            "classes": self.history,
        }

    def dump(self) -> str:
        """Basis with definitions, then nonzero structure constants ``i j -> k:c ...``."""
        lines = [f"p {self.p} class {self.cls}"]
        for i, e in enumerate(self.elements):
            d = "gen" if e.definition is None else f"{e.definition[0]}*{e.definition[1]}"
            lines.append(f"{i} w{e.weight} {'odd' if e.parity else 'even'} {d} {self.element_string(i)}")
        for (i, j), v in sorted(self.table.items()):
            if v:
                lines.append(f"{i} {j} -> " + " ".join(f"{k}:{c}" for k, c in sorted(v.items())))
        return "\n".join(lines) + "\n"


def _within(mw, caps) -> bool:
    return caps is None or all(a <= b for a, b in zip(mw, caps))


def class_one(pres: Presentation) -> GradedQuotient:
    k = pres.rank
    if pres.caps is not None and min(pres.caps) < 1:
        raise InvalidInput("caps must allow every generator")
    elems = [Element(1, tuple(int(i == g) for i in range(k)), pres.parities[g], None) for g in range(k)]
    q = GradedQuotient(pres.p, pres.parities, pres.labels, pres.caps, elems, {}, 1)
    q.history.append({"class": 1, "dimension": k, "components": _comp_json(q, 1), "seconds": 0.0})
    return q


def _comp_json(q: GradedQuotient, w: int) -> list:
    return [{"multiweight": list(mw), "dimension": d} for mw, d in q.components(w).items()]


class _Cover:
    """Products of the class-``c`` quotient extended to weight ``c + 1`` in tail coordinates."""

    def __init__(self, q: GradedQuotient):
        self.q = q
        self.c = q.cls
        self.p = q.p
        self.offset = len(q.elements)
        self.gens = list(range(len(q.parities)))
        self.tails: list[tuple[int, int]] = []
        self.tail_of: dict[tuple[int, int], int] = {}
        self.tail_mw: list[tuple] = []
        self.tail_parity: list[int] = []
        for x in q.layers[self.c - 1]:
            ex = q.elements[x]
            for g in self.gens:
                eg = q.elements[g]
                mw = tuple(a + b for a, b in zip(ex.multiweight, eg.multiweight))
                if not _within(mw, q.caps):
                    continue
                self.tail_of[(x, g)] = len(self.tails)
                self.tails.append((x, g))
                self.tail_mw.append(mw)
                self.tail_parity.append((ex.parity + eg.parity) % 2)
        self._memo: dict[tuple[int, int], dict[int, int]] = {}

    def weight(self, i: int) -> int:
        return self.q.elements[i].weight

    def parity(self, i: int) -> int:
        if i >= self.offset:
            return self.tail_parity[i - self.offset]
        return self.q.elements[i].parity

    def parity_of(self, x):
        ps = {self.parity(k) for k in x}
        return ps.pop() if len(ps) == 1 else None

    def top(self, u: int, v: int) -> dict[int, int]:
        """``[u, v]`` with ``wt(u) + wt(v) = c + 1``, in tail coordinates."""
        key = (u, v)
        r = self._memo.get(key)
        if r is not None:
            return r
        p = self.p
        ev = self.q.elements[v]
        if ev.definition is None:
            t = self.tail_of.get((u, v))
            r = {} if t is None else {self.offset + t: 1}
        else:
            vl, g = ev.definition
            acc: dict[int, int] = defaultdict(int)
            for k, a in self.q.table.get((u, vl), {}).items():
                for t, b in self.top(k, g).items():
                    acc[t] += a * b
            s = _sgn(self.q.elements[vl].parity, self.q.elements[g].parity)
            for k, a in self.q.table.get((u, g), {}).items():
                for t, b in self.top(k, vl).items():
                    acc[t] -= s * a * b
            r = {t: x % p for t, x in acc.items() if x % p}
        self._memo[key] = r
        return r

    def product(self, i: int, j: int) -> dict[int, int]:
        w = self.weight(i) + self.weight(j)
        if w <= self.c:
            return self.q.table.get((i, j), {})
        if w == self.c + 1:
            return self.top(i, j)
        raise InternalError("product above the cover weight")

    def mul(self, x, y) -> dict[int, int]:
        p = self.p
        acc: dict[int, int] = defaultdict(int)
        for i, a in x.items():
            if i >= self.offset:
                raise InternalError("tail used as a factor")
            for j, b in y.items():
                for k, c in self.product(i, j).items():
                    acc[k] += a * b * c
        return {k: v % p for k, v in acc.items() if v % p}

    def eval_tree(self, tree) -> dict[int, int]:
        if isinstance(tree, tuple):
            return self.mul(self.eval_tree(tree[0]), self.eval_tree(tree[1]))
        return {tree - 1: 1}


def _relations(cover: _Cover, pres: Presentation, deadline: float | None, stats: Counter):
    """Yield tail-space vectors that must vanish at weight ``c + 1``."""
    q, w = cover.q, cover.c + 1
    elems = q.elements
    n = len(elems)
    by_weight = defaultdict(list)
    for i, e in enumerate(elems):
        by_weight[e.weight].append(i)

    def check_time():
        if deadline is not None and time.monotonic() > deadline:
            raise BudgetExceeded("time budget exhausted", where=f"class {w}")

    # antisymmetry
    for i in range(n):
        for j in by_weight.get(w - elems[i].weight, ()):
            if j < i:
                continue
            stats["antisymmetry"] += 1
            if i == j:
                if elems[i].parity == 0:
                    yield cover.top(i, i)
                continue
            s = _sgn(elems[i].parity, elems[j].parity)
            v = dict(cover.top(i, j))
            for t, x in cover.top(j, i).items():
                v[t] = v.get(t, 0) + s * x
            yield v
    check_time()

    # Jacobi over unordered triples a <= b <= c of total weight w
    for a in range(n):
        wa = elems[a].weight
        for b in range(a, n):
            wb = elems[b].weight
            wc = w - wa - wb
            if wc < wb or wc < 1:
                continue
            for c in by_weight.get(wc, ()):
                if c < b:
                    continue
                if pres.consistency == "overlaps" and elems[a].definition is not None:
                    continue
                yield _jacobi(cover, a, b, c)
                stats["jacobi"] += 1
        check_time()

    # [u, [u, u]] for odd u
    if w % 3 == 0:
        for u in by_weight.get(w // 3, ()):
            if elems[u].parity == 1:
                stats["odd_cube"] += 1
                yield cover.mul({u: 1}, q.table.get((u, u), {}))

    for rel in pres.relations:
        if sum(tree_multiweight(rel[0][1], pres.rank)) != w:
            continue
        v: dict[int, int] = defaultdict(int)
        for coeff, tree in rel:
            for t, x in cover.eval_tree(tree).items():
                v[t] += coeff * x
        stats["explicit"] += 1
        yield dict(v)

    if pres.engel is not None:
        grades = {(wt,): idx for wt, idx in by_weight.items()}
        unit = {i: {i: 1} for i in range(n)}
        for g in cover.gens:
            if w - 1 >= pres.engel:
                for combo in slot_multisets(grades, pres.engel, (w - 1,)):
                    stats["engel"] += 1
                    if stats["engel"] % 500 == 0:
                        check_time()
                    yield arrangement_sum(cover, unit[g], [unit[i] for i in combo], full=False)
            if pres.group_identity:
                for bw, bs in by_weight.items():
                    rest = w - 1 - bw
                    if rest < 5:
                        continue
                    for b in bs:
                        for combo in slot_multisets(grades, 5, (rest,)):
                            stats["group"] += 1
                            if stats["group"] % 500 == 0:
                                check_time()
                            yield arrangement_sum(cover, unit[g], [unit[i] for i in combo], {2: unit[b]}, full=False)


def _jacobi(cover: _Cover, a: int, b: int, c: int) -> dict[int, int]:
    pa, pb, pc = cover.parity(a), cover.parity(b), cover.parity(c)
    acc: dict[int, int] = defaultdict(int)
    for (x, y, z, s) in ((a, b, c, _sgn(pa, pc)), (b, c, a, _sgn(pb, pa)), (c, a, b, _sgn(pc, pb))):
        inner = cover.q.table.get((y, z), {})
        for t, v in cover.mul({x: 1}, inner).items():
            acc[t] += s * v
    return dict(acc)


def next_class(q: GradedQuotient, pres: Presentation, *, deadline: float | None = None) -> GradedQuotient:
    """The class ``c + 1`` quotient of the presented algebra, given its class ``c`` quotient."""
    if q.terminated == "closed":
        return q
    t0 = time.monotonic()
    cover = _Cover(q)
    p = q.p
    stats: Counter = Counter()
    echelons: dict[tuple, ModpEchelon] = defaultdict(lambda: ModpEchelon(p))
    for vec in _relations(cover, pres, deadline, stats):
        if not vec:
            continue
        row = {t - cover.offset: x for t, x in vec.items() if x % p}
        if not row:
            continue
        mws = {cover.tail_mw[t] for t in row}
        if len(mws) != 1:
            raise InternalError("relation mixes multiweight components")
        echelons[mws.pop()].add(row)

    pivots: dict[int, dict[int, int]] = {}
    for ech in echelons.values():
        pivots.update(ech.reduced_pivots())
    n0 = len(q.elements)
    new_index: dict[int, int] = {}
    elements = list(q.elements)
    for t, (x, g) in enumerate(cover.tails):
        if t in pivots:
            continue
        new_index[t] = len(elements)
        elements.append(Element(q.cls + 1, cover.tail_mw[t], cover.tail_parity[t], (x, g)))

    def image(vec: Mapping[int, int]) -> dict[int, int]:
        acc: dict[int, int] = defaultdict(int)
        for key, a in vec.items():
            t = key - cover.offset
            if t in new_index:
                acc[new_index[t]] += a
            else:
                for j, r in pivots[t].items():
                    if j != t:
                        acc[new_index[j]] -= a * r
        return {k: v % p for k, v in acc.items() if v % p}

    table = dict(q.table)
    w = q.cls + 1
    for i in range(n0):
        wi = q.elements[i].weight
        for j in range(n0):
            if wi + q.elements[j].weight == w:
                v = image(cover.top(i, j))
                if v:
                    table[(i, j)] = v

    out = GradedQuotient(p, q.parities, q.labels, q.caps, elements, table, w, None, list(q.history))
    dim = len(elements) - n0
    out.history.append(
        {
            "class": w,
            "dimension": dim,
            "cover": len(cover.tails),
            "components": _comp_json(out, w),
            "instances": dict(sorted(stats.items())),
            "seconds": round(time.monotonic() - t0, 3),
        }
    )
    if dim == 0:
        out.terminated = "closed"
    return out


def run(pres: Presentation, *, time_budget: float | None = None, log=None) -> GradedQuotient:
    """Iterate until a layer vanishes, ``max_class`` is reached, or the time budget runs out."""
    deadline = None if time_budget is None else time.monotonic() + time_budget
    q = class_one(pres)
    while q.terminated is None:
        if q.cls >= pres.max_class:
            q.terminated = "max_class"
            break
        try:
            q = next_class(q, pres, deadline=deadline)
        except BudgetExceeded:
            q.terminated = "budget"
            break
        if log is not None:
            h = q.history[-1]
            log(f"class {h['class']}: dimension {h['dimension']} ({h['seconds']} s)")
    return q


# -- spot checks ----------------------------------------------------------------------------


def verify(q: GradedQuotient, pres: Presentation, *, triples: int = 10_000, engel: int = 1_000, seed: int = 0) -> dict:
    """Random antisymmetry/Jacobi triples and random relation instances, all expected to vanish.

    Products above the computed class are treated as zero, which is exact
    only for closed quotients; for open ones every sample stays at or below
    the computed class.
    """
    import random

    rng = random.Random(seed)
    elems = q.elements
    top = q.cls
    failures = Counter()
    by_weight = defaultdict(list)
    for i, e in enumerate(elems):
        by_weight[e.weight].append(i)

    def pick(maxw):
        ws = [w for w in by_weight if w <= maxw]
        if not ws:
            return None
        return rng.choice(by_weight[rng.choice(ws)])

    done_t = 0
    for _ in range(triples):
        a = pick(top - 2)
        if a is None:
            break
        b = pick(top - 1 - elems[a].weight)
        c = pick(top - elems[a].weight - elems[b].weight)
        pa, pb, pc = elems[a].parity, elems[b].parity, elems[c].parity
        acc: dict[int, int] = defaultdict(int)
        for (x, y, z, s) in ((a, b, c, _sgn(pa, pc)), (b, c, a, _sgn(pb, pa)), (c, a, b, _sgn(pc, pb))):
            for k, v in q.mul({x: 1}, q.product(y, z)).items():
                acc[k] += s * v
        if any(v % q.p for v in acc.values()):
            failures["jacobi"] += 1
        s = _sgn(pa, pb)
        anti = dict(q.product(a, b))
        for k, v in q.product(b, a).items():
            anti[k] = anti.get(k, 0) + s * v
        if any(v % q.p for v in anti.values()):
            failures["antisymmetry"] += 1
        done_t += 1

    done_e = 0
    if pres.engel is not None:
        deg = pres.engel
        for _ in range(engel):
            budget = top
            lead = pick(budget - deg)
            if lead is None:
                break
            budget -= elems[lead].weight
            slots = []
            for s_left in range(deg, 0, -1):
                x = pick(budget - (s_left - 1))
                slots.append(x)
                budget -= elems[x].weight
            vec = arrangement_sum(q, {lead: 1}, [{x: 1} for x in slots], full=False)
            if any(v % q.p for v in vec.values()):
                failures["engel"] += 1
            done_e += 1
    for rel in pres.relations:
        v: dict[int, int] = defaultdict(int)
        for coeff, tree in rel:
            for k, x in _eval_tree(q, tree).items():
                v[k] += coeff * x
        if any(x % q.p for x in v.values()):
            failures["explicit"] += 1
    return {"triples": done_t, "engel_instances": done_e, "failures": dict(failures)}


def _eval_tree(q: GradedQuotient, tree) -> dict[int, int]:
    if isinstance(tree, tuple):
        return q.mul(_eval_tree(q, tree[0]), _eval_tree(q, tree[1]))
    return {tree - 1: 1}
