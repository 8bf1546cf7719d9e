"""Signed monomials of the Grassmann algebra on e_1, e_2, ...

``e_i e_i = 0`` and ``e_i e_j = -e_j e_i`` for ``i != j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import InvalidInput


@dataclass(frozen=True)
class GrassmannMonomial:
    indices: tuple[int, ...] = ()
    coefficient: int = 1

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(i < 1 for i in idx):
            raise InvalidInput("Grassmann indices are positive")
        if any(a >= b for a, b in zip(idx, idx[1:])):
            raise InvalidInput("indices must be strictly increasing; use monomial() for arbitrary order")
        if self.coefficient == 0:
            idx = ()
        object.__setattr__(self, "indices", idx)

    @property
    def parity(self) -> int:
        return len(self.indices) % 2

    @property
    def is_zero(self) -> bool:
        return self.coefficient == 0

    def __mul__(self, other: "GrassmannMonomial") -> "GrassmannMonomial":
        return mul(self, other)

    def __neg__(self):
        return GrassmannMonomial(self.indices, -self.coefficient)

    def __str__(self):
        if self.coefficient == 0:
            return "0"
        body = "".join(f"e{i}" for i in self.indices)
        if not body:
            return str(self.coefficient)
        if self.coefficient == 1:
            return body
        if self.coefficient == -1:
            return "-" + body
        return f"{self.coefficient}{body}"


ZERO = GrassmannMonomial((), 0)
ONE = GrassmannMonomial((), 1)


def monomial(*indices: int, coefficient: int = 1) -> GrassmannMonomial:
    """``coefficient * e_{i1} e_{i2} ...`` in any order, brought to canonical form."""
    idx = list(indices)
    if len(set(idx)) != len(idx):
        return ZERO
    sign = permutation_sign_of_sequence(idx)
    return GrassmannMonomial(tuple(sorted(idx)), sign * coefficient)


def mul(x: GrassmannMonomial, y: GrassmannMonomial) -> GrassmannMonomial:
    if x.coefficient == 0 or y.coefficient == 0:
        return ZERO
    a, b = x.indices, y.indices
    out = []
    swaps = 0
    i = j = 0
    # each element of b passes over the elements of a still waiting to be merged
    while i < len(a) and j < len(b):
        if a[i] < b[j]:
            out.append(a[i])
            i += 1
        elif a[i] > b[j]:
            out.append(b[j])
            swaps += len(a) - i
            j += 1
        else:
            return ZERO
    out.extend(a[i:])
    out.extend(b[j:])
    sign = -1 if swaps % 2 else 1
    return GrassmannMonomial(tuple(out), sign * x.coefficient * y.coefficient)


def product(monomials: Sequence[GrassmannMonomial]) -> GrassmannMonomial:
    acc = ONE
    for m in monomials:
        acc = mul(acc, m)
    return acc


def permutation_sign_of_sequence(seq: Sequence) -> int:
    """Sign of the permutation sorting ``seq`` (entries distinct)."""
    seq = list(seq)
    sign = 1
    seen = [False] * len(seq)
    order = sorted(range(len(seq)), key=lambda i: seq[i])
    # order[k] = position of the k-th smallest; cycle decomposition of that map
    for s in range(len(seq)):
        if seen[s]:
            continue
        length = 0
        k = s
        while not seen[k]:
            seen[k] = True
            k = order[k]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def permutation_sign(perm: Sequence[int]) -> int:
    return permutation_sign_of_sequence(perm)


def sigma_odd_sign(parities: Sequence[int], sigma: Sequence[int]) -> int:
    """Sign of the permutation ``sigma`` induces on the odd entries.

    ``sigma`` is given in one-line notation on ``0..n-1`` (or ``1..n``): the
    permuted sequence has ``entries[sigma[i]]`` in position ``i``.
    """
    n = len(parities)
    perm = list(sigma)
    if sorted(perm) == list(range(1, n + 1)):
        perm = [s - 1 for s in perm]
    if sorted(perm) != list(range(n)):
        raise InvalidInput("sigma must be a permutation of the positions")
    odd_seq = [s for s in perm if parities[s] % 2]
    return permutation_sign_of_sequence(odd_seq)
