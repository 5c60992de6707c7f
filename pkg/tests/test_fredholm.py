from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spiked_spectra import distributions as dist
from spiked_spectra import fredholm
from spiked_spectra.symfun import exact_det


def test_grid_integrates_polynomials():
    g = fredholm.make_grid(-1.0, 10, 3.0)
    assert g.nodes.min() > -1 and g.nodes.max() < 2
    assert np.sum(g.weights * g.nodes**5) == pytest.approx((2**6 - 1) / 6)


def test_grid_validation():
    with pytest.raises(ValueError):
        fredholm.make_grid(0.0, 10, 0.0)
    with pytest.raises(ValueError):
        fredholm.make_grid(0.0, 0)


def test_polynomial_kernel_hilbert_oracle():
    # K = 1 + xy + x^2 y^2 on [0, 1]: det(I - K) = det(I - H) with H the 3x3 Hilbert matrix
    H = [[Fraction(1, i + j + 1) for j in range(3)] for i in range(3)]
    exact = exact_det([[int(i == j) - H[i][j] for j in range(3)] for i in range(3)])
    grid = fredholm.make_grid(0.0, 8, 1.0)
    d = fredholm.det_scalar(lambda x, y: 1 + x * y + (x * y) ** 2, grid)
    assert d == pytest.approx(float(exact), abs=1e-14)


def test_brownian_kernel_cosine():
    # det(I - z min(x, y)) on [0, 1] equals cos(sqrt(z)); the kink limits accuracy
    grid = fredholm.make_grid(0.0, 400, 1.0)
    for z in (0.5, 2.0, 5.0):
        d = fredholm.det_scalar(lambda x, y: z * np.minimum(x, y), grid)
        assert d == pytest.approx(math.cos(math.sqrt(z)), abs=1e-5)


def test_rank_one_exponential():
    grid = fredholm.make_grid(0.0, 60, 16.0)
    d = fredholm.det_scalar(lambda x, y: np.exp(-x - y), grid)
    assert d == pytest.approx(1 - 0.5 * (1 - math.exp(-32)), abs=1e-13)


@settings(max_examples=30, deadline=None)
@given(c=st.lists(st.floats(-2, 2), min_size=3, max_size=3), T=st.floats(-1, 1))
def test_finite_rank_equals_nystrom(c, T):
    fs = [lambda x: np.exp(-x), lambda x: x * np.exp(-x), lambda x: np.exp(-2 * x)]
    gs = [lambda y, k=k: c[k] * np.exp(-y) for k in range(3)]
    grid = fredholm.make_grid(T, 60, 16.0)

    def K(x, y):
        return sum(f(x) * g(y) for f, g in zip(fs, gs))

    assert fredholm.det_finite_rank(fs, gs, grid) == pytest.approx(
        fredholm.det_scalar(K, grid), abs=1e-10)


def test_finite_rank_edge_cases():
    grid = fredholm.make_grid(0.0, 10, 1.0)
    assert fredholm.det_finite_rank([], [], grid) == 1.0
    with pytest.raises(ValueError):
        fredholm.det_finite_rank([np.exp], [], grid)
    with pytest.raises(fredholm.KernelEvaluationError):
        fredholm.det_finite_rank([lambda x: np.full_like(x, np.inf)], [np.exp], grid)


def test_block_diagonal_and_triangular():
    grid = fredholm.make_grid(-1.0, 50, 12.0)
    k1 = dist.airy_kernel
    k2 = lambda x, y: 0.5 * np.exp(-x - y)
    zero = lambda x, y: 0.0 * x * y
    other = lambda x, y: np.sin(x) * np.cos(y)
    prod = fredholm.det_scalar(k1, grid) * fredholm.det_scalar(k2, grid)
    assert fredholm.det_matrix2([[k1, zero], [zero, k2]], grid) == pytest.approx(prod, abs=1e-13)
    assert fredholm.det_matrix2([[k1, other], [zero, k2]], grid) == pytest.approx(prod, abs=1e-12)


def test_conjugation_preserves_determinants():
    grid = fredholm.make_grid(-2.0, 60, 16.0)
    w = lambda x: np.exp(x / 4)
    d0 = fredholm.det_scalar(dist.airy_kernel, grid)
    assert fredholm.det_scalar(fredholm.conjugate_kernel(dist.airy_kernel, w), grid) == pytest.approx(
        d0, abs=1e-12)
    K0 = [[dist.airy_kernel, dist.airy_kernel_dy],
          [dist.airy_kernel_tail, lambda x, y: dist.airy_kernel(y, x)]]
    Kc = fredholm.conjugate_matrix_kernel(K0, lambda x: np.exp(x / 5), lambda x: np.exp(-x / 5))
    assert fredholm.det_matrix2(Kc, grid) == pytest.approx(fredholm.det_matrix2(K0, grid), abs=1e-10)


def test_conjugate_rejects_nonpositive_weight():
    grid = fredholm.make_grid(0.0, 10, 1.0)
    with pytest.raises(ValueError):
        fredholm.det_scalar(fredholm.conjugate_kernel(dist.airy_kernel, lambda x: x - 0.5), grid)


def test_non_finite_kernel_reports_location():
    grid = fredholm.make_grid(0.0, 10, 1.0)
    with pytest.raises(fredholm.KernelEvaluationError, match="not finite"):
        fredholm.det_scalar(lambda x, y: np.where(x > 0.5, np.nan, 1.0) + 0 * y, grid)


@pytest.mark.parametrize("T", [-6.0, -3.0, 0.0, 2.0])
def test_airy_determinant_refinement(T):
    a = fredholm.det_scalar(dist.airy_kernel, fredholm.make_grid(T, 60, 16.0))
    b = fredholm.det_scalar(dist.airy_kernel, fredholm.make_grid(T, 120, 16.0))
    assert abs(a - b) < 1e-8
