"""Exact symmetric functions: partitions, Schur, Zonal and small Jack polynomials.

Everything here works over :class:`fractions.Fraction` so that identities can
be checked with zero tolerance.  Floating-point inputs are accepted wherever a
result is naturally real-valued (``ssj_confluent`` and the rank-one series).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "Partition",
    "partitions",
    "hook_product",
    "exact_det",
    "vandermonde",
    "complete_homogeneous",
    "monomial_symmetric",
    "schur",
    "complex_zonal",
    "quaternionic_zonal_row",
    "ssj_confluent",
    "jack",
    "jack_expansion",
    "rank_one_series",
    "rank_one_determinant",
    "MAX_JACK_DEGREE",
]

MAX_JACK_DEGREE = 6


@dataclass(frozen=True, order=False)
class Partition:
    """A weakly decreasing tuple of positive integers."""

    parts: tuple

    def __init__(self, parts: Sequence[int] = ()):
        p = tuple(int(v) for v in parts if v != 0)
        if any(v < 0 for v in p):
            raise ValueError(f"partition parts must be nonnegative: {parts}")
        if any(a < b for a, b in zip(p, p[1:])):
            raise ValueError(f"partition parts must be weakly decreasing: {parts}")
        object.__setattr__(self, "parts", p)

    @property
    def weight(self) -> int:
        return sum(self.parts)

    @property
    def length(self) -> int:
        return len(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __getitem__(self, i):
        return self.parts[i]

    def __repr__(self) -> str:
        return f"Partition{self.parts}"

    def conjugate(self) -> "Partition":
        if not self.parts:
            return Partition()
        return Partition([sum(1 for p in self.parts if p > j) for j in range(self.parts[0])])

    def cells(self) -> Iterator[tuple[int, int]]:
        for i, row in enumerate(self.parts):
            for j in range(row):
                yield i, j

    def arm(self, i: int, j: int) -> int:
        return self.parts[i] - j - 1

    def leg(self, i: int, j: int) -> int:
        return self.conjugate().parts[j] - i - 1

    def hook(self, i: int, j: int) -> int:
        return self.arm(i, j) + self.leg(i, j) + 1

    def padded(self, n: int) -> tuple:
        if self.length > n:
            raise ValueError(f"{self} has more than {n} parts")
        return self.parts + (0,) * (n - self.length)

    def dominates(self, other: "Partition") -> bool:
        """Dominance order: every partial sum of self is >= that of other."""
        a = list(itertools.accumulate(self.parts))
        b = list(itertools.accumulate(other.parts))
        n = max(len(a), len(b))
        a += [a[-1] if a else 0] * (n - len(a))
        b += [b[-1] if b else 0] * (n - len(b))
        return all(x >= y for x, y in zip(a, b))


def partitions(k: int) -> list[Partition]:
    """All partitions of ``k`` in reverse-lexicographic order, (k) first."""

    def gen(n, largest):
        if n == 0:
            yield ()
            return
        for first in range(min(n, largest), 0, -1):
            for rest in gen(n - first, first):
                yield (first,) + rest

    return [Partition(p) for p in gen(k, k)]


def _as_partition(kappa) -> Partition:
    return kappa if isinstance(kappa, Partition) else Partition(kappa)


def hook_product(kappa) -> int:
    """Product of all hook lengths of the Young diagram."""
    kappa = _as_partition(kappa)
    conj = kappa.conjugate().parts
    out = 1
    for i, j in kappa.cells():
        out *= kappa.parts[i] - j + conj[j] - i - 1
    return out


# ---------------------------------------------------------------------------
# exact linear algebra
# ---------------------------------------------------------------------------

def _exact(v):
    if isinstance(v, (Fraction, int)):
        return Fraction(v)
    if isinstance(v, Rational):
        return Fraction(v.numerator, v.denominator)
    if isinstance(v, float):
        return Fraction(v)
    raise TypeError(f"cannot convert {v!r} to an exact rational")


def _is_exact(values) -> bool:
    return all(isinstance(v, (int, Fraction, Rational)) and not isinstance(v, bool) for v in values)


def exact_det(matrix: Sequence[Sequence]) -> Fraction:
    """Determinant by fraction-valued Gaussian elimination."""
    A = [[_exact(v) for v in row] for row in matrix]
    n = len(A)
    if any(len(row) != n for row in A):
        raise ValueError("matrix must be square")
    det = Fraction(1)
    for c in range(n):
        pivot = next((r for r in range(c, n) if A[r][c] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != c:
            A[c], A[pivot] = A[pivot], A[c]
            det = -det
        det *= A[c][c]
        inv = 1 / A[c][c]
        for r in range(c + 1, n):
            f = A[r][c] * inv
            if f:
                A[r] = [a - f * b for a, b in zip(A[r], A[c])]
    return det


def _det(matrix):
    flat = [v for row in matrix for v in row]
    if _is_exact(flat):
        return exact_det(matrix)
    return float(np.linalg.det(np.array(matrix, dtype=float)))


def vandermonde(x: Sequence) -> Fraction:
    """prod_{i<j} (x_j - x_i)."""
    out = Fraction(1) if _is_exact(x) else 1.0
    for i in range(len(x)):
        for j in range(i + 1, len(x)):
            out *= x[j] - x[i]
    return out


# ---------------------------------------------------------------------------
# Schur and Zonal
# ---------------------------------------------------------------------------

def complete_homogeneous(m: int, x: Sequence):
    """h_m(x), from the generating function prod 1/(1 - x_i t)."""
    if m < 0:
        return 0
    h = [Fraction(1)] + [Fraction(0)] * m
    for xi in x:
        xi = _exact(xi)
        for d in range(1, m + 1):
            h[d] += xi * h[d - 1]
    return h[m]


def monomial_symmetric(mu, x: Sequence):
    """m_mu(x): sum of x^a over distinct rearrangements a of mu."""
    mu = _as_partition(mu)
    n = len(x)
    if mu.length > n:
        return Fraction(0)
    total = Fraction(0)
    for exps in set(itertools.permutations(mu.padded(n))):
        term = Fraction(1)
        for xi, e in zip(x, exps):
            term *= _exact(xi) ** e
        total += term
    return total


def schur(kappa, x: Sequence) -> Fraction:
    """Schur polynomial s_kappa(x) in exact arithmetic.

    Uses the bialternant quotient when the variables are distinct and the
    Jacobi-Trudi determinant det(h_{kappa_i - i + j}) otherwise.
    """
    kappa = _as_partition(kappa)
    x = [_exact(v) for v in x]
    n = len(x)
    if kappa.length > n:
        return Fraction(0)
    if kappa.length == 0:
        return Fraction(1)
    if len(set(x)) == n:
        lam = kappa.padded(n)
        num = exact_det([[xi ** (lam[j] + n - 1 - j) for j in range(n)] for xi in x])
        den = exact_det([[xi ** (n - 1 - j) for j in range(n)] for xi in x])
        return num / den
    ell = kappa.length
    return exact_det(
        [[complete_homogeneous(kappa[i] - i + j, x) for j in range(ell)] for i in range(ell)]
    )


def complex_zonal(kappa, x: Sequence) -> Fraction:
    """C_kappa(x) = k!/H(kappa) s_kappa(x)."""
    kappa = _as_partition(kappa)
    return Fraction(math.factorial(kappa.weight), hook_product(kappa)) * schur(kappa, x)


def quaternionic_zonal_row(j: int, lam: Sequence) -> Fraction:
    """Q_(j)(lam) = s_(j)(lam_1, lam_1, ..., lam_N, lam_N) / (j + 1)."""
    if j < 0:
        raise ValueError("j must be nonnegative")
    doubled = [v for v in lam for _ in range(2)]
    return complete_homogeneous(j, doubled) / (j + 1)


def ssj_confluent(j: int, lam: Sequence):
    """s_(j) at the doubled variables, as a confluent determinant over V(lam)^4.

    Rows 0..2N-2 hold lam_i^k and k lam_i^{k-1}; the last row has exponent
    2N + j - 1.  Exact for rational input, floating point otherwise.
    """
    if j < 0:
        raise ValueError("j must be nonnegative")
    N = len(lam)
    if len(set(lam)) != N:
        raise ValueError("confluent Vandermonde is singular: coincident lambda")
    exact = _is_exact(lam)
    vals = [_exact(v) for v in lam] if exact else [float(v) for v in lam]
    exps = list(range(2 * N - 1)) + [2 * N + j - 1]

    def entry(e, v, deriv):
        if not deriv:
            return v**e
        return e * v ** (e - 1) if e > 0 else 0 * v

    rows = [[entry(e, v, d) for v in vals for d in (False, True)] for e in exps]
    V = vandermonde(vals)
    return _det(rows) / V**4


# ---------------------------------------------------------------------------
# Jack polynomials through the Laplacian eigenproblem
# ---------------------------------------------------------------------------

def _monomial_terms(mu: tuple, n: int) -> dict:
    return {a: Fraction(1) for a in set(itertools.permutations(mu + (0,) * (n - len(mu))))}


def _apply_laplacian(poly: dict, n: int, c: Fraction) -> dict:
    """sum_i x_i^2 d_i^2 + c sum_{i != j} x_i^2/(x_i - x_j) d_i on a symmetric poly."""
    out: dict = {}

    def add(a, v):
        if v:
            out[a] = out.get(a, 0) + v

    for a, coeff in poly.items():
        add(a, coeff * sum(e * (e - 1) for e in a))
        for i in range(n):
            for j in range(i + 1, n):
                p, q = a[i], a[j]
                if p < q:
                    continue  # handled through the swapped monomial
                base = list(a)
                if p == q:
                    add(a, c * coeff * p)
                    continue
                d = p - q
                for k in range(d + 1):
                    base[i], base[j] = q + k, q + d - k
                    add(tuple(base), c * coeff * p)
                for k in range(d - 1):
                    base[i], base[j] = q + k + 1, q + d - 1 - k
                    add(tuple(base), -c * coeff * q)
    return out


@lru_cache(maxsize=None)
def jack_expansion(alpha: Fraction, k: int) -> dict:
    """Monomial expansions {kappa: {mu: coeff}} of the Jack family of degree k.

    Each member is the Laplacian eigenfunction with leading monomial m_kappa
    (coefficient 2/alpha on the off-diagonal part), scaled so the family sums
    to (x_1 + ... + x_n)^k.
    """
    if k > MAX_JACK_DEGREE:
        raise ValueError(f"Jack construction is capped at degree {MAX_JACK_DEGREE}")
    alpha = _exact(alpha)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    c = 2 / alpha
    parts = [p.parts for p in partitions(k)]  # reverse-lex: dominant first
    n = max(k, 1)
    index = {p: i for i, p in enumerate(parts)}
    m = len(parts)
    # A[nu][mu] = coefficient of m_nu in D m_mu
    A = [[Fraction(0)] * m for _ in range(m)]
    for col, mu in enumerate(parts):
        image = _apply_laplacian(_monomial_terms(mu, n), n, c)
        for row, nu in enumerate(parts):
            A[row][col] = image.get(nu + (0,) * (n - len(nu)), Fraction(0))

    monic = {}
    for top in range(m):
        e = A[top][top]
        u = [Fraction(0)] * m
        u[top] = Fraction(1)
        for row in range(top + 1, m):
            rhs = sum(A[row][col] * u[col] for col in range(top, row))
            gap = e - A[row][row]
            if gap == 0:
                if rhs != 0:
                    raise ArithmeticError(
                        f"eigenvalue collision between {parts[top]} and {parts[row]}"
                    )
                continue
            u[row] = rhs / gap
        monic[parts[top]] = u

    # p_1^k = sum_mu k!/prod(mu_i!) m_mu
    target = [Fraction(math.factorial(k), math.prod(math.factorial(v) for v in mu)) for mu in parts]
    scale = {}
    for top in range(m):
        resid = target[top] - sum(scale[parts[s]] * monic[parts[s]][top] for s in range(top))
        scale[parts[top]] = resid
    return {
        Partition(kappa): {Partition(mu): scale[kappa] * monic[kappa][index[mu]] for mu in parts
                           if monic[kappa][index[mu]] != 0}
        for kappa in parts
    }


def jack(alpha, kappa, x: Sequence) -> Fraction:
    """Jack polynomial of parameter alpha, normalized so that sum_kappa = p_1^k.

    alpha = 2, 1, 1/2 give the real, complex and quaternionic Zonal polynomials.
    """
    kappa = _as_partition(kappa)
    expansion = jack_expansion(_exact(alpha), kappa.weight)[kappa]
    return sum((coef * monomial_symmetric(mu, x) for mu, coef in expansion.items()), Fraction(0))


# ---------------------------------------------------------------------------
# rank-one series behind the complex joint density
# ---------------------------------------------------------------------------

def rank_one_series(c: float, lam: Sequence[float], terms: int = 40) -> float:
    """sum_{k < terms} c^k / (N+k-1)! s_(k)(lam), in floating point."""
    N = len(lam)
    lam = np.asarray(lam, dtype=float)
    # h_k by the power-sum recurrence k h_k = sum_{i=1}^k p_i h_{k-i}
    p = [float(np.sum(lam**i)) for i in range(terms + 1)]
    h = [1.0]
    for k in range(1, terms):
        h.append(sum(p[i] * h[k - i] for i in range(1, k + 1)) / k)
    return float(sum(c**k / math.factorial(N + k - 1) * h[k] for k in range(terms)))


def rank_one_determinant(c: float, lam: Sequence[float]) -> float:
    """c^{-(N-1)} det[1, lam, ..., lam^{N-2}; e^{c lam}] / V(lam)."""
    N = len(lam)
    lam = np.asarray(lam, dtype=float)
    rows = [lam**k for k in range(N - 1)] + [np.exp(c * lam)]
    V = float(vandermonde(list(lam)))
    return float(np.linalg.det(np.array(rows))) / V / c ** (N - 1)
