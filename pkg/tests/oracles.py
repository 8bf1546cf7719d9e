"""Independent reference values used by the tests."""

from fractions import Fraction
from math import comb, factorial, prod

from sympy import divisors, factorint


def mobius(n: int) -> int:
    f = factorint(n)
    if any(e > 1 for e in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


def witt(k: int, n: int) -> int:
    """Dimension of the degree-n part of the free Lie algebra on k generators."""
    return sum(mobius(d) * k ** (n // d) for d in divisors(n)) // n


def super_dims(m: int, k: int, n_max: int) -> dict[tuple[int, int], int]:
    """Free Lie superalgebra on m even and k odd generators: dim by (degree, odd letters).

    Solved from the super PBW identity
    prod (1 + t^n s^j)^{L} [j odd] (1 - t^n s^j)^{-L} [j even] = 1 / (1 - (m + k s) t)
    after taking logarithms.
    """
    L: dict[tuple[int, int], int] = {}
    for n in range(1, n_max + 1):
        for j in range(0, n + 1):
            target = Fraction(comb(n, j) * m ** (n - j) * k**j, n)
            for r in range(2, n + 1):
                if n % r or j % r:
                    continue
                a, b = n // r, j // r
                sign = 1 if b % 2 == 0 else (-1) ** (r + 1)
                target -= Fraction(sign * L.get((a, b), 0), r)
            assert target.denominator == 1
            L[(n, j)] = int(target)
    return L


def hook_product(parts) -> int:
    conj = [sum(1 for r in parts if r > c) for c in range(parts[0])]
    return prod(parts[i] - j - 1 + conj[j] - i for i in range(len(parts)) for j in range(parts[i]))


def standard_tableaux_count(parts) -> int:
    return factorial(sum(parts)) // hook_product(parts)
