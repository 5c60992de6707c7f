from __future__ import annotations

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from spiked_spectra import specfun


def mp_airy_tail(x: float) -> float:
    return float(mp.quad(mp.airyai, [x, x + 10, mp.inf]))


@pytest.mark.parametrize("x", [-9.5, -6.0, -3.3, -1.0, 0.0, 0.7, 2.0, 5.0, 9.0])
def test_airy_tail_matches_mpmath(x):
    mp.mp.dps = 30
    assert specfun.airy_tail(x) == pytest.approx(mp_airy_tail(x), abs=1e-13)


def test_airy_tail_vectorized_shape():
    x = np.linspace(-4, 4, 12).reshape(3, 4)
    out = specfun.airy_tail(x)
    assert out.shape == x.shape
    assert specfun.airy_tail(0.0) == pytest.approx(1.0 / 3.0, abs=1e-15)


def test_airy_derivatives_follow_airy_equation():
    x = np.linspace(-5, 5, 21)
    ai = specfun.airy_ai(x)
    assert np.allclose(specfun.airy_derivative(2, x), x * ai, atol=1e-14)
    assert np.allclose(specfun.airy_derivative(3, x), ai + x * specfun.airy_ai_prime(x), atol=1e-13)


@pytest.mark.parametrize("j", [1, 2, 3, 4])
def test_contour_functions_against_mpmath(j):
    # t^(j) = (-1)^(j-1) Ai^(j-1)
    mp.mp.dps = 25
    for x in (-3.0, -0.5, 1.0, 2.5):
        t_ref = (-1) ** (j - 1) * float(mp.diff(mp.airyai, x, j - 1))
        assert specfun.contour_fun(j, x, "t") == pytest.approx(t_ref, abs=1e-12)
    # s^(1) = 1 - int_x^inf Ai
    for x in (-3.0, 0.0, 2.0):
        assert specfun.contour_fun(1, x, "s") == pytest.approx(1 - mp_airy_tail(x), abs=1e-12)


def test_contour_s_recurrence():
    # differentiating under the integral: d/dx s^(j+1) = s^(j)
    x, h = 0.3, 1e-4
    for j in (1, 2, 3):
        d = (specfun.contour_fun(j + 1, x + h, "s") - specfun.contour_fun(j + 1, x - h, "s")) / (2 * h)
        assert d == pytest.approx(specfun.contour_fun(j, x, "s"), abs=1e-7)


def test_contour_rejects_bad_index():
    with pytest.raises(ValueError):
        specfun.contour_fun(0, 1.0)
    with pytest.raises(ValueError):
        specfun.contour_fun(1, 1.0, "u")


def test_hastings_mcleod_constants():
    sol = specfun.default_painleve()
    # known values of the Hastings-McLeod solution at the origin
    assert sol(0.0) == pytest.approx(0.3670615515480784, abs=1e-10)
    assert sol(0.0, "qp") == pytest.approx(-0.2953721054475501, abs=1e-10)


def test_painleve_asymptotics():
    sol = specfun.default_painleve()
    x = -9.0
    assert sol(x) == pytest.approx(np.sqrt(-x / 2), rel=2e-3)
    assert sol(12.0) == pytest.approx(special.airy(12.0)[0], rel=1e-14)
    assert np.all(np.diff(sol.q[::-1]) < 0)


def test_painleve_integrals_consistent():
    sol = specfun.default_painleve()
    x = np.linspace(-6, 6, 7)
    # I1' = -I3 where I3 = int_x^inf q^2; check I1'' = q^2 by differences
    h = 1e-3
    d2 = (sol(x + h, "I1") - 2 * sol(x, "I1") + sol(x - h, "I1")) / h**2
    assert np.allclose(d2, sol(x) ** 2, atol=1e-5)


def test_painleve_csv_round_trip():
    sol = specfun.solve_painleve(-2.0, 8.0, 0.01)
    back = specfun.PainleveSolution.from_csv(sol.to_csv())
    assert np.array_equal(back.grid, sol.grid)
    assert np.array_equal(back.q, sol.q)


def test_painleve_argument_validation():
    with pytest.raises(ValueError):
        specfun.solve_painleve(x_max=5.0)
    with pytest.raises(ValueError):
        specfun.solve_painleve(x_min=-12.0)
    with pytest.raises(ValueError):
        specfun.default_painleve()(-11.0)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(0, 25), alpha=st.floats(-0.9, 30), x=st.floats(0, 60))
def test_laguerre_matches_scipy(n, alpha, x):
    ref = special.eval_genlaguerre(n, alpha, x)
    assert specfun.laguerre(n, alpha, x) == pytest.approx(ref, rel=1e-9, abs=1e-9 * (1 + abs(ref)))


@settings(max_examples=40, deadline=None)
@given(k=st.integers(0, 30), alpha=st.floats(0, 40), y=st.floats(0.01, 150))
def test_laguerre_functions_closed_form(k, alpha, y):
    logn = 0.5 * (special.gammaln(k + 1) - special.gammaln(k + alpha + 1))
    with np.errstate(all="ignore"):
        ref = np.exp(logn + 0.5 * alpha * np.log(y) - y / 2) * special.eval_genlaguerre(k, alpha, y)
    got = specfun.laguerre_functions(k, alpha, y)[k]
    assert got == pytest.approx(ref, rel=1e-8, abs=1e-12)


def test_hermite_functions_orthonormal():
    x, w = special.roots_hermitenorm(60)
    H = specfun.hermite_functions(12, x)
    gram = (H * w * np.exp(x**2 / 2)) @ H.T
    assert np.allclose(gram, np.eye(12), atol=1e-12)


def test_hermite_polynomials():
    x = np.linspace(-3, 3, 7)
    for j in range(8):
        assert np.allclose(specfun.hermite(j, x), special.eval_hermitenorm(j, x), atol=1e-10)


def test_log_factorial():
    assert specfun.log_factorial(10) == pytest.approx(np.log(3628800.0))
