"""Basic commutators on an ordered, graded generating set.

A basic commutator of weight 1 is a generator.  For weight k >= 2 it is a
bracket ``[c, d]`` of basic commutators with ``c > d`` such that, when ``c``
is itself ``[e, f]``, ``f <= d``.  Commutators are ordered weight-major;
within one weight, nodes are sorted by ``(ordinal(d), ordinal(c))``.

Trees passed to :func:`is_basic` and :func:`parse_bracket` use nested
2-tuples of generator references, e.g. ``(("b", "a"), "a")`` for
``[b,a,a]``.  A generator reference is its 1-based index or its label.
"""

from __future__ import annotations

import string
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InvalidInput

EVEN, ODD = 0, 1
_PARITY_NAMES = {"even": EVEN, "odd": ODD, "e": EVEN, "o": ODD, "0": EVEN, "1": ODD}


@dataclass(frozen=True)
class Generator:
    index: int  # 1-based position in the total order
    parity: int
    label: str


def parse_parity(p) -> int:
    if p in (EVEN, ODD):
        return int(p)
    try:
        return _PARITY_NAMES[str(p).strip().lower()]
    except KeyError:
        raise InvalidInput(f"unknown parity {p!r}") from None


def make_generators(parities: Iterable, labels: Sequence[str] | None = None) -> tuple[Generator, ...]:
    """Generators ``1..k`` with the given parities; labels default to a, b, c, ..."""
    pars = [parse_parity(p) for p in parities]
    if not pars:
        raise InvalidInput("empty generator set")
    if labels is None:
        if len(pars) <= 26:
            labels = string.ascii_lowercase[: len(pars)]
        else:
            labels = [f"x{i}" for i in range(1, len(pars) + 1)]
    if len(labels) != len(pars) or len(set(labels)) != len(labels):
        raise InvalidInput("labels must be distinct and match the generator count")
    return tuple(Generator(i + 1, p, str(lab)) for i, (p, lab) in enumerate(zip(pars, labels)))


def _as_generators(generators) -> tuple[Generator, ...]:
    gens = tuple(generators)
    if not gens:
        raise InvalidInput("empty generator set")
    if all(isinstance(g, Generator) for g in gens):
        if [g.index for g in gens] != list(range(1, len(gens) + 1)):
            raise InvalidInput("generator indices must be 1..k in order")
        return gens
    return make_generators(gens)


class BasicCommutator:
    """One basic commutator; children are held by reference."""

    __slots__ = ("ordinal", "generator", "left", "right", "weight", "multiweight", "parity")

    def __init__(self, ordinal, generator, left, right, weight, multiweight, parity):
        self.ordinal = ordinal
        self.generator = generator
        self.left = left
        self.right = right
        self.weight = weight
        self.multiweight = multiweight
        self.parity = parity

    @property
    def is_leaf(self) -> bool:
        return self.generator is not None

    def tree(self):
        """Nested tuple of 1-based generator indices."""
        if self.is_leaf:
            return self.generator
        return (self.left.tree(), self.right.tree())

    def _items(self, labels):
        if self.is_leaf:
            return [labels[self.generator - 1]]
        if self.left.is_leaf:
            head = [labels[self.left.generator - 1]]
        else:
            head = self.left._items(labels)
        return head + [self.right.to_string(labels)]

    def to_string(self, labels) -> str:
        if self.is_leaf:
            return labels[self.generator - 1]
        return "[" + ",".join(self._items(labels)) + "]"

    def __repr__(self):
        return f"BasicCommutator(#{self.ordinal}, {self.tree()!r})"


def _within(mw, caps) -> bool:
    return caps is None or all(m <= c for m, c in zip(mw, caps))


class HallBasis:
    """All basic commutators up to ``max_weight`` whose multiweight respects ``caps``."""

    def __init__(self, generators, max_weight: int, caps: Sequence[int] | None = None):
        self.generators = _as_generators(generators)
        k = len(self.generators)
        if max_weight < 1:
            raise InvalidInput("max_weight must be >= 1")
        if caps is not None:
            caps = tuple(int(c) for c in caps)
            if len(caps) != k or any(c < 1 for c in caps):
                raise InvalidInput("caps must be positive integers, one per generator")
        self.max_weight = max_weight
        self.caps = caps
        self.labels = [g.label for g in self.generators]

        elements: list[BasicCommutator] = []
        by_weight: dict[int, list[BasicCommutator]] = defaultdict(list)
        self._pair: dict[tuple[int, int], int] = {}
        for g in self.generators:
            mw = tuple(1 if j == g.index - 1 else 0 for j in range(k))
            leaf = BasicCommutator(len(elements), g.index, None, None, 1, mw, g.parity)
            elements.append(leaf)
            by_weight[1].append(leaf)

        # weight -> multiweight -> commutators, for cap-aware pairing
        by_wmw: dict[int, dict[tuple, list]] = defaultdict(lambda: defaultdict(list))
        for c in by_weight[1]:
            by_wmw[1][c.multiweight].append(c)

        for w in range(2, max_weight + 1):
            found = []
            for n in range(1, w // 2 + 1):
                m = w - n
                for d in by_weight[n]:
                    room = None if caps is None else tuple(cp - x for cp, x in zip(caps, d.multiweight))
                    for mw_c, cs in by_wmw[m].items():
                        if room is not None and not _within(mw_c, room):
                            continue
                        for c in cs:
                            if c.ordinal <= d.ordinal:
                                continue
                            if not c.is_leaf and c.right.ordinal > d.ordinal:
                                continue
                            found.append((d.ordinal, c.ordinal, c, d))
            found.sort(key=lambda t: (t[0], t[1]))
            for _, _, c, d in found:
                mw = tuple(x + y for x, y in zip(c.multiweight, d.multiweight))
                node = BasicCommutator(len(elements), None, c, d, w, mw, (c.parity + d.parity) % 2)
                elements.append(node)
                by_weight[w].append(node)
                by_wmw[w][mw].append(node)
                self._pair[(c.ordinal, d.ordinal)] = node.ordinal
        self.commutators: tuple[BasicCommutator, ...] = tuple(elements)
        self.by_weight = {w: tuple(v) for w, v in by_weight.items()}

    def __len__(self):
        return len(self.commutators)

    def __getitem__(self, i) -> BasicCommutator:
        return self.commutators[i]

    def find(self, left: int, right: int) -> int | None:
        """Ordinal of the basic commutator ``[left, right]`` (by ordinals), if it is one."""
        return self._pair.get((left, right))

    def leaf(self, gen_index: int) -> BasicCommutator:
        return self.commutators[gen_index - 1]

    def counts(self) -> list[int]:
        return [len(self.by_weight.get(w, ())) for w in range(1, self.max_weight + 1)]

    def to_string(self, c: BasicCommutator) -> str:
        return c.to_string(self.labels)

    def report(self) -> list[dict]:
        return [
            {
                "ordinal": c.ordinal,
                "commutator": c.to_string(self.labels),
                "weight": c.weight,
                "multiweight": list(c.multiweight),
                "parity": "odd" if c.parity else "even",
            }
            for c in self.commutators
        ]


def enumerate_basic(generators, max_weight: int, caps: Sequence[int] | None = None) -> list[BasicCommutator]:
    return list(HallBasis(generators, max_weight, caps).commutators)


# -- trees -----------------------------------------------------------------


def _resolve_leaf(x, gens: tuple[Generator, ...]) -> int:
    if isinstance(x, bool):
        raise InvalidInput(f"bad generator reference {x!r}")
    if isinstance(x, int):
        if 1 <= x <= len(gens):
            return x
        raise InvalidInput(f"generator index {x} outside 1..{len(gens)}")
    if isinstance(x, str):
        for g in gens:
            if g.label == x:
                return g.index
        raise InvalidInput(f"unknown generator label {x!r}")
    raise InvalidInput(f"bad tree node {x!r}")


def normalize_tree(tree, generators):
    """Replace labels by 1-based indices; validates the shape."""
    gens = _as_generators(generators)

    def walk(t):
        if isinstance(t, (tuple, list)):
            if len(t) != 2:
                raise InvalidInput(f"tree nodes must be binary, got {t!r}")
            return (walk(t[0]), walk(t[1]))
        return _resolve_leaf(t, gens)

    return walk(tree)


def tree_multiweight(tree, k: int) -> tuple[int, ...]:
    mw = [0] * k

    def walk(t):
        if isinstance(t, tuple):
            walk(t[0])
            walk(t[1])
        else:
            mw[t - 1] += 1

    walk(tree)
    return tuple(mw)


def parse_bracket(text: str):
    """Parse ``[b,a,[c,a]]`` (left-normed) into a nested tuple of labels."""
    pos = 0
    s = text.replace(" ", "")

    def atom():
        nonlocal pos
        if pos < len(s) and s[pos] == "[":
            pos += 1
            items = [atom()]
            while pos < len(s) and s[pos] == ",":
                pos += 1
                items.append(atom())
            if pos >= len(s) or s[pos] != "]":
                raise InvalidInput(f"unbalanced bracket in {text!r}")
            pos += 1
            if len(items) < 2:
                raise InvalidInput(f"bracket needs two or more entries: {text!r}")
            acc = items[0]
            for it in items[1:]:
                acc = (acc, it)
            return acc
        start = pos
        while pos < len(s) and s[pos] not in ",[]":
            pos += 1
        if start == pos:
            raise InvalidInput(f"empty entry in {text!r}")
        tok = s[start:pos]
        return int(tok) if tok.isdigit() else tok

    out = atom()
    if pos != len(s):
        raise InvalidInput(f"trailing characters in {text!r}")
    return out


def is_basic(tree, generators) -> bool:
    gens = _as_generators(generators)
    t = normalize_tree(tree, gens)
    if not isinstance(t, tuple):
        return True
    caps = [max(m, 1) for m in tree_multiweight(t, len(gens))]
    basis = HallBasis(gens, _tree_weight(t), caps)

    def ordinal(t):
        if not isinstance(t, tuple):
            return t - 1
        oc, od = ordinal(t[0]), ordinal(t[1])
        if oc is None or od is None:
            return None
        if oc <= od:
            return None
        c = basis[oc]
        if not c.is_leaf and c.right.ordinal > od:
            return None
        return basis.find(oc, od)

    return ordinal(t) is not None


def _tree_weight(t) -> int:
    if isinstance(t, tuple):
        return _tree_weight(t[0]) + _tree_weight(t[1])
    return 1
