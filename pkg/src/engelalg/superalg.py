"""Free Lie superalgebras over the integers.

The module basis is the set of basic commutators together with the squares
``[c, c]`` of the odd ones.  Products of basis elements are rewritten into
that basis using only division-free identities:

* ``[v, u] = -(-1)^{|u||v|} [u, v]``
* ``[[e, f], v] = [e, [f, v]] + (-1)^{|f||v|} [[e, v], f]``
* ``[u, [c, c]] = 2 [[u, c], c]`` for odd ``c``
* ``[u, u] = 0`` for even ``u``, ``[c, [c, c]] = 0`` for odd ``c``

Everything beyond the class bound, or with a multiweight exceeding the caps,
is treated as zero.  Both truncations are by ideals spanned by basis
elements, so they commute with the rewriting.
"""

from __future__ import annotations

import sys
from collections import Counter
from typing import Iterable, Mapping, Sequence

from .errors import InternalError, InvalidInput
from .freelie import HallBasis, _as_generators, normalize_tree

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))

BASIC, SQUARE = "basic", "square"


class SuperBasisElement:
    __slots__ = ("index", "kind", "commutator", "weight", "multiweight", "parity")

    def __init__(self, index, kind, commutator):
        self.index = index
        self.kind = kind
        self.commutator = commutator
        if kind == SQUARE:
            if commutator.parity != 1:
                raise InvalidInput("[c,c] is a basis element only for odd c")
            self.weight = 2 * commutator.weight
            self.multiweight = tuple(2 * m for m in commutator.multiweight)
            self.parity = 0
        else:
            self.weight = commutator.weight
            self.multiweight = commutator.multiweight
            self.parity = commutator.parity

    def to_string(self, labels) -> str:
        s = self.commutator.to_string(labels)
        return f"[{s},{s}]" if self.kind == SQUARE else s

    def __repr__(self):
        return f"SuperBasisElement(#{self.index}, {self.kind}, {self.commutator.tree()!r})"


class SuperElement(dict):
    """Integer combination of basis elements, keyed by basis index; no zero entries."""

    def __init__(self, terms: Mapping[int, int] | Iterable = ()):
        super().__init__()
        items = terms.items() if isinstance(terms, Mapping) else terms
        for k, v in items:
            if v:
                self[k] = self.get(k, 0) + v
                if not self[k]:
                    del self[k]

    def __add__(self, other):
        out = SuperElement(self)
        _axpy(out, 1, other)
        return out

    def __sub__(self, other):
        out = SuperElement(self)
        _axpy(out, -1, other)
        return out

    def __neg__(self):
        return SuperElement({k: -v for k, v in self.items()})

    def __rmul__(self, scalar: int):
        return SuperElement({k: scalar * v for k, v in self.items()})

    @property
    def is_zero(self) -> bool:
        return not self


def _axpy(acc: dict, a: int, x: Mapping[int, int]) -> None:
    """acc += a*x, dropping zeros."""
    if not a:
        return
    for k, v in x.items():
        s = acc.get(k, 0) + a * v
        if s:
            acc[k] = s
        else:
            acc.pop(k, None)


def _sign(parity_product: int) -> int:
    return -1 if parity_product % 2 else 1


class FreeLieSuperalgebra:
    """Free Lie superalgebra on graded generators, truncated at ``class_bound`` and ``caps``."""

    def __init__(self, generators, class_bound: int, caps: Sequence[int] | None = None):
        self.generators = _as_generators(generators)
        if class_bound < 1:
            raise InvalidInput("class bound must be positive")
        self.class_bound = class_bound
        self.hall = HallBasis(self.generators, class_bound, caps)
        self.caps = self.hall.caps
        self.labels = self.hall.labels
        self.k = len(self.generators)

        basis: list[SuperBasisElement] = []
        self._basic_index: dict[int, int] = {}
        self._square_index: dict[int, int] = {}
        for w in range(1, class_bound + 1):
            for c in self.hall.by_weight.get(w, ()):
                self._basic_index[c.ordinal] = len(basis)
                basis.append(SuperBasisElement(len(basis), BASIC, c))
            if w % 2 == 0:
                for c in self.hall.by_weight.get(w // 2, ()):
                    if c.parity == 1 and self._fits(tuple(2 * m for m in c.multiweight)):
                        self._square_index[c.ordinal] = len(basis)
                        basis.append(SuperBasisElement(len(basis), SQUARE, c))
        self.basis: tuple[SuperBasisElement, ...] = tuple(basis)
        self._weight = [b.weight for b in basis]
        self._parity = [b.parity for b in basis]
        self._mw = [b.multiweight for b in basis]
        self._memo: dict[tuple[int, int], dict[int, int]] = {}
        self._active: set[tuple[int, int]] = set()
        self.diagnostics = Counter()

    # -- basis bookkeeping ---------------------------------------------------

    def _fits(self, mw) -> bool:
        return self.caps is None or all(m <= c for m, c in zip(mw, self.caps))

    def __len__(self):
        return len(self.basis)

    def by_weight(self, w: int) -> list[SuperBasisElement]:
        return [b for b in self.basis if b.weight == w]

    def dimensions(self) -> list[int]:
        out = [0] * self.class_bound
        for b in self.basis:
            out[b.weight - 1] += 1
        return out

    def component(self, multiweight: Sequence[int]) -> list[int]:
        mw = tuple(multiweight)
        return [b.index for b in self.basis if b.multiweight == mw]

    def generator(self, g) -> int:
        """Basis index of generator ``g`` (1-based index or label)."""
        t = normalize_tree(g, self.generators)
        return self._basic_index[t - 1]

    def basic_index(self, hall_ordinal: int) -> int:
        return self._basic_index[hall_ordinal]

    def element_string(self, i: int) -> str:
        return self.basis[i].to_string(self.labels)

    def format(self, x: Mapping[int, int]) -> str:
        if not x:
            return "0"
        parts = []
        for k in sorted(x):
            v = x[k]
            s = self.element_string(k)
            if v == 1:
                parts.append(f"+{s}")
            elif v == -1:
                parts.append(f"-{s}")
            else:
                parts.append(f"{v:+d}*{s}")
        out = " ".join(parts)
        return out[1:] if out.startswith("+") else out

    # -- products ------------------------------------------------------------

    def in_bounds(self, i: int, j: int) -> bool:
        if self._weight[i] + self._weight[j] > self.class_bound:
            return False
        if self.caps is None:
            return True
        return all(a + b <= c for a, b, c in zip(self._mw[i], self._mw[j], self.caps))

    def product(self, i: int, j: int) -> dict[int, int]:
        """``[basis[i], basis[j]]`` in basis coordinates (do not mutate the result)."""
        if self._weight[i] + self._weight[j] > self.class_bound:
            self.diagnostics["discarded_class"] += 1
            return {}
        if not self.in_bounds(i, j):
            self.diagnostics["discarded_caps"] += 1
            return {}
        return self._product(i, j)

    def _product(self, i: int, j: int) -> dict[int, int]:
        key = (i, j)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if key in self._active:
            raise InternalError(f"rewriting cycle at product {key}")
        self._active.add(key)
        try:
            out = self._compute(i, j)
        finally:
            self._active.discard(key)
        self._memo[key] = out
        return out

    def _lmul(self, i: int, x: Mapping[int, int]) -> dict[int, int]:
        acc: dict[int, int] = {}
        for k, v in x.items():
            _axpy(acc, v, self._product(i, k))
        return acc

    def _rmul(self, x: Mapping[int, int], j: int) -> dict[int, int]:
        acc: dict[int, int] = {}
        for k, v in x.items():
            _axpy(acc, v, self._product(k, j))
        return acc

    def _compute(self, i: int, j: int) -> dict[int, int]:
        u, v = self.basis[i], self.basis[j]
        if v.kind == SQUARE:
            c = self._basic_index[v.commutator.ordinal]
            if i == c:
                return {}
            out: dict[int, int] = {}
            _axpy(out, 2, self._rmul(self._product(i, c), c))
            return out
        if u.kind == SQUARE:
            # [[c,c], v] = -[v, [c,c]]
            out = {}
            _axpy(out, -1, self._product(j, i))
            return out
        pu, pv = u.parity, v.parity
        if i == j:
            if pu == 0:
                return {}
            return {self._square_index[u.commutator.ordinal]: 1}
        cu, cv = u.commutator, v.commutator
        if cu.ordinal < cv.ordinal:
            out = {}
            _axpy(out, -_sign(pu * pv), self._product(j, i))
            return out
        if cu.is_leaf or cu.right.ordinal <= cv.ordinal:
            node = self.hall.find(cu.ordinal, cv.ordinal)
            if node is None:
                raise InternalError(f"missing basic commutator for {cu!r}, {cv!r}")
            return {self._basic_index[node]: 1}
        # [[e,f],v] = [e,[f,v]] + (-1)^{|f||v|} [[e,v],f]
        e = self._basic_index[cu.left.ordinal]
        f = self._basic_index[cu.right.ordinal]
        out = self._lmul(e, self._product(f, j))
        _axpy(out, _sign(cu.right.parity * pv), self._rmul(self._product(e, j), f))
        return out

    def mul(self, x: Mapping[int, int], y: Mapping[int, int]) -> SuperElement:
        """Bilinear bracket of two elements given in basis coordinates."""
        acc: dict[int, int] = {}
        for i, a in x.items():
            for j, b in y.items():
                _axpy(acc, a * b, self.product(i, j))
        return SuperElement(acc)

    def weight_of(self, x: Mapping[int, int]) -> int | None:
        ws = {self._weight[k] for k in x}
        return ws.pop() if len(ws) == 1 else None

    def multiweight_of(self, x: Mapping[int, int]):
        ms = {self._mw[k] for k in x}
        return ms.pop() if len(ms) == 1 else None

    def parity_of(self, x: Mapping[int, int]):
        ps = {self._parity[k] for k in x}
        return ps.pop() if len(ps) == 1 else None

    def normalize(self, expr) -> SuperElement:
        """Evaluate a bracketing into basis coordinates.

        ``expr`` is a generator reference, a basis element given as a mapping,
        or a 2-tuple/list of such expressions.  Left-normed strings such as
        ``"[b,a,a]"`` are accepted too.
        """
        if isinstance(expr, str) and expr.startswith("["):
            from .freelie import parse_bracket

            expr = parse_bracket(expr)
        return SuperElement(self._eval(expr))

    def _eval(self, expr) -> dict[int, int]:
        if isinstance(expr, Mapping):
            return dict(expr)
        if isinstance(expr, (tuple, list)):
            if len(expr) != 2:
                raise InvalidInput(f"bracket nodes are binary, got {expr!r}")
            return self.mul(self._eval(expr[0]), self._eval(expr[1]))
        return {self.generator(expr): 1}

    def left_normed(self, items: Sequence[Mapping[int, int]]) -> SuperElement:
        acc = dict(items[0])
        for it in items[1:]:
            acc = self.mul(acc, it)
            if not acc:
                break
        return SuperElement(acc)


class StructureTable:
    """Complete product table of a truncated free Lie superalgebra."""

    def __init__(self, algebra: FreeLieSuperalgebra, products: dict[tuple[int, int], dict[int, int]]):
        self.algebra = algebra
        self.products = products

    @property
    def basis(self):
        return self.algebra.basis

    def per_weight(self) -> dict[int, list[SuperBasisElement]]:
        out: dict[int, list] = {}
        for b in self.algebra.basis:
            out.setdefault(b.weight, []).append(b)
        return out

    def product(self, i: int, j: int) -> dict[int, int]:
        return self.products.get((i, j), {})

    def dump(self) -> str:
        alg = self.algebra
        lines = [f"# basis {len(alg.basis)}"]
        for b in alg.basis:
            mw = ",".join(str(m) for m in b.multiweight)
            par = "odd" if b.parity else "even"
            lines.append(f"{b.index} w={b.weight} mw=({mw}) {par} {b.to_string(alg.labels)}")
        lines.append(f"# products {len(self.products)}")
        for (i, j) in sorted(self.products):
            val = self.products[(i, j)]
            rhs = " + ".join(f"{val[k]}*{k}" for k in sorted(val)) if val else "0"
            lines.append(f"{i} {j} -> {rhs}")
        return "\n".join(lines) + "\n"


def build_structure_table(generators, class_bound: int, caps: Sequence[int] | None = None) -> StructureTable:
    if class_bound < 2:
        raise InvalidInput("class bound must be at least 2")
    alg = FreeLieSuperalgebra(generators, class_bound, caps)
    products = {}
    n = len(alg.basis)
    # basis lists are fixed per weight before any product targeting them is built
    for i in range(n):
        for j in range(n):
            if alg.in_bounds(i, j):
                products[(i, j)] = dict(alg._product(i, j))
    return StructureTable(alg, products)
