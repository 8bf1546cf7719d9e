"""Exact linear algebra over Z and GF(p).

Ranks modulo word-size primes use chunked elimination whose bulk work is
exact matrix products; larger primes fall back to Python integers.  Determinants are exact (Bareiss for small
sizes, multi-modular reconstruction under the Hadamard bound otherwise).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from sympy import factorint, isprime, nextprime

from .errors import BudgetExceeded, InvalidInput
from .grassmann import permutation_sign

_NUMPY_PRIME_LIMIT = 2**31
_MODULI_START = 2**19  # moduli below 2^20 keep float64 BLAS products exact
DEFAULT_SNF_BUDGET = 250_000  # rows * cols


class IntMatrix:
    """Sparse integer matrix; entries stored per row as ``{col: value}``."""

    def __init__(self, rows: int, cols: int, entries: Iterable[tuple[int, int, int]] = ()):
        if rows < 0 or cols < 0:
            raise InvalidInput("negative dimensions")
        self.rows = rows
        self.cols = cols
        self._rows: list[dict[int, int]] = [dict() for _ in range(rows)]
        for r, c, v in entries:
            if not (0 <= r < rows and 0 <= c < cols):
                raise InvalidInput(f"entry ({r},{c}) outside {rows}x{cols}")
            v = int(v)
            if v:
                self._rows[r][c] = self._rows[r].get(c, 0) + v
                if not self._rows[r][c]:
                    del self._rows[r][c]

    @classmethod
    def from_dense(cls, data: Sequence[Sequence[int]]) -> "IntMatrix":
        rows = len(data)
        cols = len(data[0]) if rows else 0
        return cls(rows, cols, ((i, j, int(v)) for i, row in enumerate(data) for j, v in enumerate(row) if v))

    @classmethod
    def from_rows(cls, rows: Sequence[dict[int, int]], cols: int) -> "IntMatrix":
        return cls(len(rows), cols, ((i, j, v) for i, row in enumerate(rows) for j, v in row.items()))

    def row(self, i: int) -> dict[int, int]:
        return self._rows[i]

    def entries(self):
        for i, row in enumerate(self._rows):
            for j in sorted(row):
                yield i, j, row[j]

    @property
    def nnz(self) -> int:
        return sum(len(r) for r in self._rows)

    def to_dense(self) -> list[list[int]]:
        out = [[0] * self.cols for _ in range(self.rows)]
        for i, row in enumerate(self._rows):
            for j, v in row.items():
                out[i][j] = v
        return out

    def submatrix(self, rows: Sequence[int]) -> "IntMatrix":
        return IntMatrix.from_rows([self._rows[i] for i in rows], self.cols)

    def transpose(self) -> "IntMatrix":
        return IntMatrix(self.cols, self.rows, ((j, i, v) for i, j, v in self.entries()))

    def max_abs(self) -> int:
        return max((abs(v) for r in self._rows for v in r.values()), default=0)

    def __eq__(self, other):
        return (
            isinstance(other, IntMatrix)
            and (self.rows, self.cols) == (other.rows, other.cols)
            and self._rows == other._rows
        )

    def __repr__(self):
        return f"IntMatrix({self.rows}x{self.cols}, nnz={self.nnz})"


# -- matrix file format: "rows cols M", then "r c v" (1-based), then "0 0 0" --


def dumps_matrix(m: IntMatrix) -> str:
    lines = [f"{m.rows} {m.cols} M"]
    lines.extend(f"{i + 1} {j + 1} {v}" for i, j, v in m.entries())
    lines.append("0 0 0")
    return "\n".join(lines) + "\n"


def loads_matrix(text: str) -> IntMatrix:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InvalidInput("empty matrix file")
    head = lines[0].split()
    if len(head) != 3 or head[2] != "M":
        raise InvalidInput(f"bad matrix header {lines[0]!r}")
    rows, cols = int(head[0]), int(head[1])
    entries = []
    terminated = False
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise InvalidInput(f"bad matrix line {ln!r}")
        r, c, v = int(parts[0]), int(parts[1]), int(parts[2])
        if (r, c, v) == (0, 0, 0):
            terminated = True
            break
        entries.append((r - 1, c - 1, v))
    if not terminated:
        raise InvalidInput("matrix file is missing the 0 0 0 terminator")
    return IntMatrix(rows, cols, entries)


def write_matrix(m: IntMatrix, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dumps_matrix(m))


def read_matrix(path) -> IntMatrix:
    with open(path, encoding="ascii") as fh:
        return loads_matrix(fh.read())


# -- GF(p) -------------------------------------------------------------------


def _check_prime(p: int) -> None:
    if not isinstance(p, (int, np.integer)) or p < 2 or not isprime(int(p)):
        raise InvalidInput(f"{p} is not prime")


def _dense_mod(m: IntMatrix, p: int, rows: Sequence[int] | None = None) -> np.ndarray:
    idx = range(m.rows) if rows is None else rows
    a = np.zeros((len(idx), m.cols), dtype=np.int64)
    for k, i in enumerate(idx):
        for j, v in m.row(i).items():
            a[k, j] = v % p
    return a


def _echelon_py(rows: list[dict[int, int]], p: int) -> int:
    """Rank of sparse rows mod p with Python integers."""
    pivots: dict[int, dict[int, int]] = {}
    for row in rows:
        v = {j: x % p for j, x in row.items() if x % p}
        while v:
            c = min(v)
            prow = pivots.get(c)
            if prow is None:
                inv = pow(v[c], -1, p)
                pivots[c] = {j: x * inv % p for j, x in v.items()}
                break
            f = v[c]
            for j, x in prow.items():
                y = (v.get(j, 0) - f * x) % p
                if y:
                    v[j] = y
                else:
                    v.pop(j, None)
    return len(pivots)


def _matmul_mod(x: np.ndarray, y: np.ndarray, p: int) -> np.ndarray:
    """Exact ``x @ y mod p`` for int64 arrays with entries in ``[0, p)``."""
    k = x.shape[1]
    out = np.zeros((x.shape[0], y.shape[1]), dtype=np.int64)
    sq = (p - 1) ** 2 or 1
    if sq * 64 <= 2**53:
        # float64 products are exact while partial sums stay below 2^53
        step = 2**53 // sq
        for s in range(0, k, step):
            part = x[:, s : s + step].astype(np.float64) @ y[s : s + step].astype(np.float64)
            out = (out + np.fmod(part, p).astype(np.int64)) % p
    else:
        step = max(1, (2**63 - 1) // sq)
        for s in range(0, k, step):
            out = (out + (x[:, s : s + step] @ y[s : s + step]) % p) % p
    return out


def _greedy_rows_np(m: IntMatrix, order: Sequence[int], p: int, limit: int, chunk: int = 128):
    """Rows of ``m`` (scanned in ``order``) independent over GF(p), with their pivot values.

    Each row is reduced against all earlier chosen rows, so the reduced rows
    are triangular with respect to their pivot columns.  Chunks are first
    reduced against the Gauss-Jordan basis of earlier chunks in one product.
    """
    n = m.cols
    basis = np.zeros((0, n), dtype=np.int64)  # Gauss-Jordan: basis[:, piv] is the identity
    piv: list[int] = []
    chosen: list[tuple[int, int, int]] = []  # (row, pivot column, pivot value)
    for s in range(0, len(order), chunk):
        idx = order[s : s + chunk]
        x = _dense_mod(m, p, idx)
        if piv:
            x = (x - _matmul_mod(x[:, piv], basis, p)) % p
        new_rows, new_piv = [], []
        for t, i in enumerate(idx):
            v = x[t]
            if new_piv:
                v = (v - _matmul_mod(v[None, new_piv], np.array(new_rows), p)[0]) % p
            nz = np.flatnonzero(v)
            if nz.size == 0:
                continue
            c = int(nz[0])
            val = int(v[c])
            v = v * pow(val, -1, p) % p
            for r in range(len(new_rows)):
                f = new_rows[r][c]
                if f:
                    new_rows[r] = (new_rows[r] - f * v) % p
            new_rows.append(v)
            new_piv.append(c)
            chosen.append((i, c, val))
            if len(chosen) == limit:
                break
        if new_rows:
            nr = np.array(new_rows)
            if piv:
                basis = (basis - _matmul_mod(basis[:, new_piv], nr, p)) % p
            basis = np.vstack([basis, nr])
            piv.extend(new_piv)
        if len(chosen) == limit:
            break
    return chosen


def rank_mod_p(m: IntMatrix, p: int) -> int:
    _check_prime(p)
    if m.rows == 0 or m.cols == 0:
        return 0
    if p < _NUMPY_PRIME_LIMIT:
        t = m if m.rows >= m.cols else m.transpose()
        return len(_greedy_rows_np(t, range(t.rows), p, t.cols))
    return _echelon_py([m.row(i) for i in range(m.rows)], p)


def row_rank_profile_mod_p(m: IntMatrix, order: Sequence[int], p: int, limit: int | None = None) -> list[int]:
    """Greedily pick rows (scanned in ``order``) that are independent over GF(p)."""
    limit = m.cols if limit is None else limit
    if p < _NUMPY_PRIME_LIMIT:
        return [i for i, _, _ in _greedy_rows_np(m, list(order), p, limit)]
    chosen = []
    pivots: dict[int, dict[int, int]] = {}
    for i in order:
        if len(chosen) == limit:
            break
        v = {j: x % p for j, x in m.row(i).items() if x % p}
        while v:
            c = min(v)
            prow = pivots.get(c)
            if prow is None:
                inv = pow(v[c], -1, p)
                pivots[c] = {j: x * inv % p for j, x in v.items()}
                chosen.append(i)
                break
            f = v[c]
            for j, x in prow.items():
                y = (v.get(j, 0) - f * x) % p
                if y:
                    v[j] = y
                else:
                    v.pop(j, None)
    return chosen


class ModpEchelon:
    """Incremental reduced row echelon form over GF(p) on sparse rows.

    Pivots sit on the smallest column of each row, so a fixed column order
    gives reproducible results.
    """

    def __init__(self, p: int):
        self.p = p
        self.pivots: dict[int, dict[int, int]] = {}

    def reduce(self, row: dict[int, int]) -> dict[int, int]:
        p = self.p
        v = {j: x % p for j, x in row.items() if x % p}
        out: dict[int, int] = {}
        while v:
            c = min(v)
            prow = self.pivots.get(c)
            if prow is None:
                out[c] = v.pop(c)
                continue
            f = v[c]
            for j, x in prow.items():
                y = (v.get(j, 0) - f * x) % p
                if y:
                    v[j] = y
                else:
                    v.pop(j, None)
        return out

    def add(self, row: dict[int, int]) -> bool:
        v = self.reduce(row)
        if not v:
            return False
        p = self.p
        c = min(v)
        inv = pow(v[c], -1, p)
        self.pivots[c] = {j: x * inv % p for j, x in v.items()}
        return True

    def __len__(self):
        return len(self.pivots)

    def reduced_pivots(self) -> dict[int, dict[int, int]]:
        """Fully reduced rows: no pivot column appears in another pivot row."""
        p = self.p
        done: dict[int, dict[int, int]] = {}
        for c in sorted(self.pivots, reverse=True):
            row = dict(self.pivots[c])
            for j in [j for j in row if j != c and j in done]:
                f = row.pop(j)
                for k, x in done[j].items():
                    if k == j:
                        continue
                    y = (row.get(k, 0) - f * x) % p
                    if y:
                        row[k] = y
                    else:
                        row.pop(k, None)
            done[c] = row
        return done


# -- determinants --------------------------------------------------------------


def _bareiss(a: list[list[int]]) -> int:
    n = len(a)
    a = [row[:] for row in a]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k]:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            row_i = a[i]
            row_k = a[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
        prev = akk
    return sign * a[n - 1][n - 1]


def hadamard_bound(dense: Sequence[Sequence[int]]) -> int:
    log2 = 0.0
    for row in dense:
        s = sum(int(x) * int(x) for x in row)
        if s == 0:
            return 0
        log2 += 0.5 * math.log2(s)
    return 1 << (int(log2) + 2)


def _det_mod_p(m: IntMatrix, p: int) -> int:
    # reduced rows are triangular in pivot order: det = sign(row -> pivot) * product of pivots
    chosen = _greedy_rows_np(m, range(m.rows), p, m.rows)
    if len(chosen) < m.rows:
        return 0
    d = permutation_sign([c for _, c, _ in chosen])
    for _, _, v in chosen:
        d = d * v % p
    return d % p


def det_exact(m: IntMatrix, *, method: str = "auto", deadline: float | None = None) -> int:
    """Exact determinant; ``deadline`` is a ``time.monotonic()`` value checked between moduli."""
    if m.rows != m.cols:
        raise InvalidInput(f"determinant of non-square {m.rows}x{m.cols} matrix")
    n = m.rows
    if n == 0:
        return 1
    dense = m.to_dense()
    if method == "bareiss" or (method == "auto" and n <= 40):
        return _bareiss(dense)
    bound = hadamard_bound(dense)
    if bound == 0:
        return 0
    residues, moduli = [], []
    prod = 1
    q = _MODULI_START
    needed = math.ceil((bound.bit_length() + 1) / math.log2(_MODULI_START))
    while prod <= 2 * bound:
        if deadline is not None and time.monotonic() > deadline:
            raise BudgetExceeded(
                f"determinant of a {n}x{n} matrix: {len(moduli)} of about {needed} moduli done before the deadline",
                where="det_exact",
            )
        q = nextprime(q)
        residues.append(_det_mod_p(m, q))
        moduli.append(q)
        prod *= q
    return _crt_symmetric(residues, moduli)


def _crt_symmetric(residues: Sequence[int], moduli: Sequence[int]) -> int:
    x, mod = 0, 1
    for r, q in zip(residues, moduli):
        t = ((r - x) * pow(mod, -1, q)) % q
        x += mod * t
        mod *= q
    return x - mod if x > mod // 2 else x


# -- Smith normal form -------------------------------------------------------------


def smith_normal_form(m: IntMatrix, budget: int | None = DEFAULT_SNF_BUDGET) -> list[int]:
    """Elementary divisors ``d1 | d2 | ...`` (length min(rows, cols)); zeros trail."""
    if budget is not None and m.rows * m.cols > budget:
        raise BudgetExceeded(
            f"SNF of a {m.rows}x{m.cols} matrix exceeds the budget of {budget} entries; "
            "use random-det-gcd certification instead",
            where="smith_normal_form",
        )
    a = m.to_dense()
    nr, nc = m.rows, m.cols
    divisors = []
    t = 0
    while t < min(nr, nc):
        best = None
        for i in range(t, nr):
            row = a[i]
            for j in range(t, nc):
                v = row[j]
                if v and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
                    if best[0] == 1:
                        break
            if best is not None and best[0] == 1:
                break
        if best is None:
            break
        _, i, j = best
        a[t], a[i] = a[i], a[t]
        if j != t:
            for row in a:
                row[t], row[j] = row[j], row[t]
        while True:
            piv = a[t][t]
            changed = False
            for i in range(t + 1, nr):
                v = a[i][t]
                if v:
                    q = _round_div(v, piv)
                    if q:
                        ri, rt = a[i], a[t]
                        for j in range(t, nc):
                            if rt[j]:
                                ri[j] -= q * rt[j]
                    if a[i][t]:
                        changed = True
            rt = a[t]
            for j in range(t + 1, nc):
                v = rt[j]
                if v:
                    q = _round_div(v, piv)
                    if q:
                        for i in range(t, nr):
                            if a[i][t]:
                                a[i][j] -= q * a[i][t]
                    if rt[j]:
                        changed = True
            if changed:
                _move_min_to_pivot(a, t, nr, nc)
                continue
            bad = None
            for i in range(t + 1, nr):
                for j in range(t + 1, nc):
                    if a[i][j] % piv:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            rt, rb = a[t], a[bad]
            for j in range(t, nc):
                rt[j] += rb[j]
        divisors.append(abs(a[t][t]))
        t += 1
    divisors.extend([0] * (min(nr, nc) - len(divisors)))
    return divisors


def _round_div(a: int, b: int) -> int:
    """Nearest-integer quotient, so remainders are at most |b|/2."""
    q, r = divmod(a, b)
    if 2 * abs(r) > abs(b):
        q += 1
    return q


def _move_min_to_pivot(a, t, nr, nc):
    best = None
    for i in range(t, nr):
        v = a[i][t]
        if v and (best is None or abs(v) < best[0]):
            best = (abs(v), i, "r")
    for j in range(t, nc):
        v = a[t][j]
        if v and (best is None or abs(v) < best[0]):
            best = (abs(v), j, "c")
    if best is None:
        return
    _, k, kind = best
    if kind == "r" and k != t:
        a[t], a[k] = a[k], a[t]
    elif kind == "c" and k != t:
        for row in a:
            row[t], row[k] = row[k], row[t]


# -- randomised certification ----------------------------------------------------------


def strip_primes(value: int, primes: Iterable[int]) -> tuple[int, dict[int, int]]:
    v = abs(value)
    removed = {}
    if v == 0:
        return 0, removed
    for q in sorted(primes):
        e = 0
        while v % q == 0:
            v //= q
            e += 1
        if e:
            removed[q] = e
    return v, removed


def smallest_prime_outside(excluded: Iterable[int], start: int = 11) -> int:
    ex = set(excluded)
    p = start if isprime(start) else nextprime(start)
    while p in ex:
        p = nextprime(p)
    return p


def bounded_factor(g: int, effort: int = 10**6) -> tuple[dict[int, int], int]:
    """Prime factors found within ``effort`` and the unfactored composite cofactor (1 if none)."""
    if g <= 1:
        return {}, 1
    fac = factorint(g, limit=effort)
    primes, rest = {}, 1
    for q, e in fac.items():
        if isprime(q):
            primes[q] = e
        else:
            rest *= q**e
    return primes, rest


@dataclass
class RankCertificate:
    method: str
    rows: int
    cols: int
    status: str  # "full-rank", "inconclusive", "rank-deficient"
    exclude: list[int]
    seed: int | None = None
    probe_prime: int | None = None
    samples: list[dict] = field(default_factory=list)
    gcd: int | None = None
    prime_exceptions: dict[int, int] = field(default_factory=dict)  # prime -> rank there
    unfactored: int = 1
    elementary_divisors: list[int] | None = None
    rank: int | None = None
    prime: int | None = None
    row_selection: str = "greedy elimination over GF(probe), rows scanned in seeded random order"

    @property
    def full_rank_outside(self) -> list[int]:
        """Primes at which full column rank may fail (excluded ones included)."""
        return sorted(set(self.exclude) | {q for q, r in self.prime_exceptions.items() if r < self.cols})

    def claim(self) -> str:
        if self.method == "gfp-rank":
            return f"rank = {self.rank} over GF({self.prime})"
        if self.status == "inconclusive":
            return f"rank over GF({self.probe_prime}) is {self.rank} < {self.cols}; no claim for other primes"
        if self.status == "rank-deficient":
            return "not of full column rank over the rationals"
        bad = [q for q, r in sorted(self.prime_exceptions.items()) if r < self.cols]
        s = f"full column rank over GF(p) for every prime p not in {sorted(self.exclude)}"
        if bad:
            s += f" and not in {bad}"
        if self.unfactored > 1:
            s += f" and coprime to {self.unfactored}"
        return s + "; also over the rationals"

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "rows": self.rows,
            "cols": self.cols,
            "status": self.status,
            "claim": self.claim(),
            "exclude": sorted(self.exclude),
            "seed": self.seed,
            "probe_prime": self.probe_prime,
            "row_selection": self.row_selection if self.method == "random-det-gcd" else None,
            "samples": self.samples,
            "gcd": None if self.gcd is None else str(self.gcd),
            "prime_exceptions": {str(q): r for q, r in sorted(self.prime_exceptions.items())},
            "unfactored": str(self.unfactored),
            "elementary_divisors": None if self.elementary_divisors is None else [str(d) for d in self.elementary_divisors],
            "rank": self.rank,
            "prime": self.prime,
        }


def certify_full_rank_random(
    m: IntMatrix,
    exclude: Iterable[int] = (2, 3, 5, 7),
    samples: int = 3,
    seed: int = 0,
    probe: int | None = None,
    factor_effort: int = 10**6,
    deadline: float | None = None,
) -> RankCertificate:
    """Full column rank certificate from gcds of stripped determinants of random maximal minors."""
    exclude = sorted(set(int(q) for q in exclude))
    if not 2 <= samples <= 5:
        raise InvalidInput("samples must be between 2 and 5")
    n = m.cols
    if m.rows < n:
        raise InvalidInput(f"need at least as many rows as columns, got {m.rows}x{n}")
    probe = smallest_prime_outside(exclude) if probe is None else probe
    cert = RankCertificate("random-det-gcd", m.rows, n, "full-rank", exclude, seed=seed, probe_prime=probe)
    if n == 0:
        cert.gcd = 1
        return cert
    rng = np.random.Generator(np.random.Philox(seed))
    g = 0
    for s in range(samples):
        order = [int(i) for i in rng.permutation(m.rows)]
        chosen = row_rank_profile_mod_p(m, order, probe, limit=n)
        if len(chosen) < n:
            cert.status = "inconclusive"
            cert.rank = len(chosen)
            cert.samples.append({"sample": s, "independent_rows": len(chosen)})
            return cert
        d = det_exact(m.submatrix(chosen), deadline=deadline)
        residue, removed = strip_primes(d, exclude)
        cert.samples.append(
            {
                "sample": s,
                "rows": chosen,
                "determinant": str(d),
                "stripped": {str(q): e for q, e in removed.items()},
                "residue": str(residue),
            }
        )
        g = math.gcd(g, residue)
        if g == 1 and s >= 1:
            break
    cert.gcd = g
    primes, rest = bounded_factor(g, factor_effort)
    cert.unfactored = rest
    for q in sorted(primes):
        cert.prime_exceptions[q] = rank_mod_p(m, q)
    return cert


def certify_snf(m: IntMatrix, exclude: Iterable[int] = (2, 3, 5, 7), budget: int | None = DEFAULT_SNF_BUDGET) -> RankCertificate:
    exclude = sorted(set(int(q) for q in exclude))
    divs = smith_normal_form(m, budget)
    cert = RankCertificate("smith", m.rows, m.cols, "full-rank", exclude, elementary_divisors=divs)
    cert.rank = sum(1 for d in divs if d)
    if cert.rank < m.cols:
        cert.status = "rank-deficient"
        return cert
    last = divs[-1] if divs else 1
    residue, _ = strip_primes(last, exclude)
    cert.gcd = residue
    primes, rest = bounded_factor(residue)
    cert.unfactored = rest
    for q in primes:
        cert.prime_exceptions[q] = sum(1 for d in divs if d % q)
    return cert


def certify_gfp(m: IntMatrix, p: int) -> RankCertificate:
    r = rank_mod_p(m, p)
    cert = RankCertificate("gfp-rank", m.rows, m.cols, "full-rank" if r == m.cols else "rank-deficient", [], rank=r, prime=p)
    return cert
