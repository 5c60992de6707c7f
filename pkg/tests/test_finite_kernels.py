from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from spiked_spectra import finite_kernels as fk
from spiked_spectra.ensembles import DivisionAlgebra, ModelParams, SpikeSpec


def complex_system(N, M, spikes="", **kw):
    return fk.ComplexSpikedSystem(ModelParams(DivisionAlgebra.COMPLEX, N, M), SpikeSpec.parse(spikes), **kw)


def quaternion_system(N, M, a=None):
    return fk.QuaternionSkewSystem(ModelParams(DivisionAlgebra.QUATERNION, N, M), a)


def two_point_cdf(density, T, upper):
    """P(max <= T) for a symmetric density on (0, inf)^2 by adaptive quadrature."""
    opts = dict(epsabs=1e-13, epsrel=1e-11)
    num = integrate.dblquad(lambda y, x: density(x, y), 0, T, 0, T, **opts)[0]
    den = integrate.dblquad(lambda y, x: density(x, y), 0, upper, 0, upper, **opts)[0]
    return num / den


# ---------------------------------------------------------------------------
# complex system
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("a", [None, -0.5, 0.4, 1.0, 2.5])
def test_complex_single_variable_gap(a):
    # N = 1: M lambda / (1 + a) is Gamma(M)
    M = 5
    spikes = "" if a is None else str(a)
    s = complex_system(1, M, spikes)
    scale = 1 + (a or 0.0)
    for T in (0.3, 1.0, 2.2):
        assert s.gap_probability(T) == pytest.approx(special.gammainc(M, M * T / scale), abs=1e-11)


@pytest.mark.parametrize("a", [0.5, 1.7])
def test_complex_two_variable_gap(a):
    N, M = 2, 3
    c = M * a / (1 + a)
    alpha = M - N

    def density(x, y):
        return (y - x) * (math.exp(c * y) - math.exp(c * x)) * (x * y) ** alpha * math.exp(-M * (x + y))

    s = complex_system(N, M, str(a))
    for T in (0.8, 2.0, 3.5):
        assert s.gap_probability(T) == pytest.approx(two_point_cdf(density, T, 40.0), abs=1e-8)


def test_complex_white_two_variable_gap():
    N, M = 2, 4

    def density(x, y):
        return (x - y) ** 2 * (x * y) ** (M - N) * math.exp(-M * (x + y))

    s = complex_system(N, M)
    for T in (0.7, 1.5):
        assert s.gap_probability(T) == pytest.approx(two_point_cdf(density, T, 30.0), abs=1e-8)


@pytest.mark.parametrize("spikes", ["0.5", "0.3,0.9", "0.8:2", "-0.4,1.5"])
def test_biorthonormality(spikes):
    assert complex_system(5, 8, spikes).biorthonormality_check() < 1e-8


def test_phi_is_polynomial_of_degree_j():
    s = complex_system(4, 6, "0.5,1.2")
    x = np.linspace(0.1, 3.0, 12)
    for j in range(4):
        vals = s.phi(j, x)
        coef = np.polynomial.polynomial.polyfit(x, vals, j)
        assert np.allclose(np.polynomial.polynomial.polyval(x, coef), vals, rtol=1e-8, atol=1e-10)
        assert coef[-1] == pytest.approx(s.leading_coefficient(j), rel=1e-6)


def test_kernel_trace_is_N():
    s = complex_system(4, 7, "0.6")
    g = s.tail_grid(1e-6)
    trace = np.sum(g.weights * s.kernel_k2(g.nodes, g.nodes))
    assert trace == pytest.approx(4.0, abs=1e-6)


def test_kernel_split_and_integral_forms():
    s = complex_system(4, 6, "0.5")
    rng = np.random.default_rng(0)
    x, y = rng.uniform(0.2, 3.0, 8), rng.uniform(0.2, 3.0, 8)
    assert np.allclose(s.kernel_k2a(x, y) + s.kernel_k2b(x, y), s.kernel_k2(x, y), atol=1e-13)
    assert np.allclose(s.kernel_k2a(x, y), s.kernel_k2a_integral(x, y), atol=1e-8)
    assert np.allclose(fk.kernel_k2(s, x, y), s.kernel_k2(x, y))


def test_gap_methods_and_radii_agree():
    adaptive = complex_system(3, 5, "0.4,1.2")
    fixed = complex_system(3, 5, "0.4,1.2", radius_mode="fixed")
    for T in (0.8, 2.0):
        ref = adaptive.gap_probability(T)
        assert adaptive.gap_probability(T, "nystrom") == pytest.approx(ref, abs=1e-9)
        assert fixed.gap_probability(T) == pytest.approx(ref, abs=1e-9)
        assert fk.gap_probability_complex(adaptive, T) == ref


def test_gap_is_monotone_distribution():
    s = complex_system(3, 6, "1.2")
    T = np.linspace(0.05, 14.0, 12)
    vals = np.array([s.gap_probability(t) for t in T])
    assert vals[0] < 1e-6 and vals[-1] > 1 - 1e-6
    assert np.all(np.diff(vals) > -1e-12)


def test_complex_validation():
    with pytest.raises(ValueError):
        fk.ComplexSpikedSystem(ModelParams(DivisionAlgebra.QUATERNION, 2, 3), SpikeSpec())
    with pytest.raises(ValueError):
        complex_system(2, 3, "0.5", radius_mode="wide")
    with pytest.raises(ValueError):
        complex_system(1, 3, "0.5,0.7")
    # Sigma must stay inside every pole
    with pytest.raises(ValueError):
        complex_system(2, 3, "1.0", radius_mode="fixed", sigma_radius=0.9)
    with pytest.raises(ValueError):
        complex_system(2, 3, "0.5").gap_probability(1.0, method="monte_carlo")


# ---------------------------------------------------------------------------
# quaternion system
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("a", [None, -0.6, 0.3, 1.0, 1.5, 4.0])
def test_quaternion_single_variable_gap(a):
    # N = 1: 2 M lambda / (1 + a) is Gamma(2M)
    M = 4
    q = quaternion_system(1, M, a)
    scale = 1 + (a or 0.0)
    for T in (0.4, 1.0, 2.5):
        assert q.gap_probability(T) == pytest.approx(special.gammainc(2 * M, 2 * M * T / scale), abs=1e-10)


def test_quaternion_white_two_variable_gap():
    N, M = 2, 3
    alpha = 2 * (M - N) + 1

    def density(x, y):
        return (x - y) ** 4 * (x * y) ** alpha * math.exp(-2 * M * (x + y))

    q = quaternion_system(N, M)
    for T in (0.8, 1.5, 2.5):
        assert q.gap_probability(T) == pytest.approx(two_point_cdf(density, T, 25.0), abs=1e-8)


@pytest.mark.parametrize("a", [0.3, 1.5])
def test_quaternion_two_variable_gap(a):
    N, M = 2, 4
    b = 2 * M * a / (1 + a)
    alpha = 2 * (M - N) + 1

    def density(x, y):
        # confluent determinant over rows 1, lambda, lambda^2 and the exponential,
        # with the exponential row scaled by exp(-b max(x, y)) to keep it O(1)
        s = max(x, y)
        ex, ey = math.exp(b * (x - s)), math.exp(b * (y - s))
        mat = np.array([
            [1.0, 0.0, 1.0, 0.0],
            [x, 1.0, y, 1.0],
            [x * x, 2 * x, y * y, 2 * y],
            [ex, b * ex, ey, b * ey],
        ])
        return np.linalg.det(mat) * (x * y) ** alpha * math.exp(b * s - 2 * M * (x + y))

    q = quaternion_system(N, M, a)
    for T in (1.0, 2.0, 3.0):
        assert q.gap_probability(T) == pytest.approx(two_point_cdf(density, T, 15.0), abs=1e-7)


@pytest.mark.parametrize("a", [None, 0.4, -0.5, 1.2])
def test_skew_orthogonality(a):
    assert quaternion_system(3, 5, a).skew_orthogonality_check() < 1e-7


def test_skew_kernel_identities():
    q = quaternion_system(3, 5, 0.4)
    rng = np.random.default_rng(1)
    x, y = rng.uniform(0.3, 2.5, 6), rng.uniform(0.3, 2.5, 6)
    S, SD, IS, S_yx = q.kernel_s4(x, y)
    # IS is antisymmetric, SD is antisymmetric, and the (2,2) block is the transpose of S
    S_t = q.kernel_s4(y, x)
    assert np.allclose(S_t[2], -IS, atol=1e-12)
    assert np.allclose(S_t[1], -SD, atol=1e-12)
    assert np.allclose(S_yx, S_t[0], atol=1e-12)
    assert np.allclose(sum(q.kernel_s4_split(x, y)), S, atol=1e-12)


def test_skew_kernel_trace_is_N():
    q = quaternion_system(3, 6, 0.7)
    g = q.tail_grid(1e-6)
    trace = np.sum(g.weights * q.kernel_s4(g.nodes, g.nodes)[0])
    assert trace == pytest.approx(3.0, abs=1e-6)


def test_quaternion_auto_method():
    small = quaternion_system(2, 4, 0.5)
    for T in (1.0, 2.0):
        assert small.gap_probability(T, "nystrom") == pytest.approx(small.gap_probability(T, "finite_rank"),
                                                                    abs=1e-9)
    assert fk.gap_probability_quaternion(small, 1.0) == small.gap_probability(1.0)


def test_quaternion_validation():
    with pytest.raises(ValueError):
        quaternion_system(2, 3, -1.0)
    with pytest.raises(ValueError):
        fk.QuaternionSkewSystem(ModelParams(DivisionAlgebra.COMPLEX, 2, 3), 0.5)
    with pytest.raises(ValueError):
        quaternion_system(2, 3, 0.5).gap_probability(1.0, method="other")


@settings(max_examples=8, deadline=None)
@given(a=st.floats(-0.8, 3.0), T=st.floats(0.3, 3.0))
def test_small_spike_continuity(a, T):
    # P(max <= T) is decreasing in the spike value
    lo, hi = sorted((a, a + 0.3))
    assert quaternion_system(2, 4, lo).gap_probability(T) >= quaternion_system(2, 4, hi).gap_probability(T) - 1e-10
    assert complex_system(2, 4, str(lo)).gap_probability(T) >= complex_system(2, 4, str(hi)).gap_probability(T) - 1e-10


def test_tiny_spike_matches_white():
    for T in (0.8, 1.6):
        assert quaternion_system(3, 5, 1e-9).gap_probability(T) == pytest.approx(
            quaternion_system(3, 5).gap_probability(T), abs=1e-7)
        assert complex_system(3, 5, "1e-9").gap_probability(T) == pytest.approx(
            complex_system(3, 5).gap_probability(T), abs=1e-7)


# ---------------------------------------------------------------------------
# helpers and probe
# ---------------------------------------------------------------------------

def test_composite_gauss_legendre():
    x, w = fk.composite_gauss_legendre(0.0, 2.0, 4, order=6)
    assert np.sum(w * x**7) == pytest.approx(2**8 / 8)


def test_joint_pdf_quadrature_matches_gap():
    s = complex_system(2, 3, "0.5")
    Ts = [1.0, 2.0]
    ref = fk.max_cdf_two_by_quadrature(2, 3, 0.5, Ts)
    assert np.allclose(ref, [s.gap_probability(T) for T in Ts], atol=1e-10)
    with pytest.raises(ValueError):
        fk.joint_pdf_rank1(1, np.ones(2), 3, 0.5)


def test_convergence_probe_decreases():
    rows = fk.convergence_probe("white", [40, 80])
    assert rows[1].sup_distance < rows[0].sup_distance
    assert rows[0].N == 10
