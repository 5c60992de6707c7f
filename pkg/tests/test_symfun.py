from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spiked_spectra import symfun
from spiked_spectra.symfun import Partition

# p(k) for k = 0..12 (OEIS A000041)
PARTITION_NUMBERS = [1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77]

rationals = st.fractions(min_value=-3, max_value=3, max_denominator=9)


def ssyt_schur(kappa, x):
    """Schur polynomial by brute-force enumeration of semistandard tableaux."""
    kappa = Partition(kappa)
    cells = list(kappa.cells())
    n = len(x)
    total = Fraction(0)
    for fill in itertools.product(range(n), repeat=len(cells)):
        T = dict(zip(cells, fill))
        ok = all(T[(i, j)] <= T[(i, j + 1)] for i, j in cells if (i, j + 1) in T)
        ok = ok and all(T[(i, j)] < T[(i + 1, j)] for i, j in cells if (i + 1, j) in T)
        if ok:
            total += math.prod((Fraction(x[v]) for v in fill), start=Fraction(1))
    return total


@lru_cache(maxsize=None)
def count_standard_tableaux(kappa: tuple) -> int:
    """Number of standard Young tableaux by removing corners recursively."""
    if sum(kappa) == 0:
        return 1
    total = 0
    for i, row in enumerate(kappa):
        if row and (i + 1 == len(kappa) or kappa[i + 1] < row):
            smaller = list(kappa)
            smaller[i] -= 1
            total += count_standard_tableaux(tuple(v for v in smaller if v))
    return total


@pytest.mark.parametrize("k", range(0, 13))
def test_partition_count(k):
    parts = symfun.partitions(k)
    assert len(parts) == PARTITION_NUMBERS[k]
    assert len(set(p.parts for p in parts)) == len(parts)
    assert all(p.weight == k for p in parts)


def test_partition_validation():
    with pytest.raises(ValueError):
        Partition((1, 2))
    with pytest.raises(ValueError):
        Partition((2, -1))
    assert Partition((3, 0, 0)).parts == (3,)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=1, max_size=5))
def test_conjugate_involution_and_hooks(raw):
    p = Partition(sorted(raw, reverse=True))
    assert p.conjugate().conjugate() == p
    assert symfun.hook_product(p) == symfun.hook_product(p.conjugate())
    # hook length formula against a direct count of standard tableaux
    assert math.factorial(p.weight) // symfun.hook_product(p) == count_standard_tableaux(p.parts)


def test_hook_product_by_hand():
    assert symfun.hook_product((3, 2)) == 4 * 3 * 1 * 2 * 1
    assert symfun.hook_product((4, 3, 3, 2, 1)) == 414720


def test_dominance():
    assert Partition((3, 1)).dominates(Partition((2, 2)))
    assert not Partition((2, 2)).dominates(Partition((3, 1)))
    assert Partition((2, 2)).dominates(Partition((2, 1, 1)))


@settings(max_examples=30, deadline=None)
@given(k=st.integers(1, 4), x=st.lists(rationals, min_size=1, max_size=3))
def test_schur_matches_tableaux(k, x):
    for p in symfun.partitions(k):
        assert symfun.schur(p, x) == ssyt_schur(p, x)


def test_schur_with_repeated_variables():
    x = [Fraction(1, 2), Fraction(1, 2), Fraction(-2)]
    for p in symfun.partitions(4):
        assert symfun.schur(p, x) == ssyt_schur(p, x)


def test_schur_specializations():
    a = Fraction(3, 4)
    for k in range(6):
        assert symfun.schur((k,), [a]) == a**k
    # s_(k)(1^N) = C(N+k-1, k); s_(k) vanishes if it has more parts than variables
    for N in range(1, 5):
        assert symfun.schur((3,), [1] * N) == math.comb(N + 2, 3)
    assert symfun.schur((1, 1, 1), [2, 3]) == 0


@settings(max_examples=25, deadline=None)
@given(x=st.lists(rationals, min_size=1, max_size=4), k=st.integers(1, 5))
def test_complex_zonal_sum_is_power(x, k):
    assert sum(symfun.complex_zonal(p, x) for p in symfun.partitions(k)) == sum(x) ** k


def test_real_zonal_table():
    # James's table of C_kappa in monomials for degree 3 (alpha = 2)
    x = [Fraction(2, 3), Fraction(-1, 5), Fraction(3, 7)]
    m = symfun.monomial_symmetric
    assert symfun.jack(2, (3,), x) == m((3,), x) + Fraction(3, 5) * m((2, 1), x) + Fraction(2, 5) * m(
        (1, 1, 1), x)
    assert symfun.jack(2, (2, 1), x) == Fraction(12, 5) * m((2, 1), x) + Fraction(18, 5) * m((1, 1, 1), x)
    assert symfun.jack(2, (1, 1, 1), x) == 2 * m((1, 1, 1), x)
    # degree 2 for each alpha: C_(2) = m_2 + 2/(1 + alpha) m_11
    for alpha in (Fraction(2), Fraction(1), Fraction(1, 2)):
        assert symfun.jack(alpha, (2,), x) == m((2,), x) + 2 / (1 + alpha) * m((1, 1), x)


@pytest.mark.parametrize("alpha", [Fraction(2), Fraction(1), Fraction(1, 2)])
def test_jack_sum_is_power(alpha):
    x = [Fraction(1, 2), Fraction(-3, 4), Fraction(5, 3)]
    for k in range(1, 6):
        assert sum(symfun.jack(alpha, p, x) for p in symfun.partitions(k)) == sum(x) ** k


def test_jack_degree_cap():
    with pytest.raises(ValueError):
        symfun.jack_expansion(Fraction(1), symfun.MAX_JACK_DEGREE + 1)
    with pytest.raises(ValueError):
        symfun.jack_expansion(Fraction(0), 2)


@settings(max_examples=20, deadline=None)
@given(lam=st.lists(rationals, min_size=1, max_size=3))
def test_quaternion_row_generating_function(lam):
    # sum_j (j+1) Q_(j)(lam) t^j = prod (1 - lam_i t)^(-2)
    order = 6
    coef = [Fraction(1)] + [Fraction(0)] * order
    for v in lam:
        factor = [(m + 1) * v**m for m in range(order + 1)]
        coef = [sum(coef[i] * factor[m - i] for i in range(m + 1)) for m in range(order + 1)]
    for j in range(order + 1):
        assert (j + 1) * symfun.quaternionic_zonal_row(j, lam) == coef[j]


@settings(max_examples=20, deadline=None)
@given(lam=st.lists(st.fractions(1, 5, max_denominator=7), min_size=1, max_size=3, unique=True),
       j=st.integers(0, 4))
def test_confluent_vandermonde_lemma(lam, j):
    assert symfun.ssj_confluent(j, lam) == (j + 1) * symfun.quaternionic_zonal_row(j, lam)


def test_confluent_rejects_coincident():
    with pytest.raises(ValueError):
        symfun.ssj_confluent(1, [Fraction(1), Fraction(1)])


def test_vandermonde_and_exact_det():
    x = [Fraction(1), Fraction(3), Fraction(4)]
    assert symfun.vandermonde(x) == (3 - 1) * (4 - 1) * (4 - 3)
    A = [[2, 1], [Fraction(1, 3), 5]]
    assert symfun.exact_det(A) == Fraction(29, 3)
    with pytest.raises(ValueError):
        symfun.exact_det([[1, 2]])


def test_rank_one_series_matches_determinant():
    rng = np.random.default_rng(5)
    for N in (2, 3):
        lam = rng.uniform(0.3, 2.0, N)
        for c in (0.5, 1.0, 2.5):
            s = symfun.rank_one_series(c, lam, terms=60)
            d = symfun.rank_one_determinant(c, lam)
            assert s == pytest.approx(d, rel=1e-10)
