"""Limiting distributions of the rescaled largest eigenvalue.

F_GUE and F_GSE have two independent backends: the Painleve II formulas and
Fredholm determinants of Airy-type kernels.  F_GOE is Painleve only, G_t is a
finite-rank determinant, and F_GUE_t and F_GSE1 are Fredholm only.
"""
from __future__ import annotations

import threading
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import airy, ndtr

from . import fredholm
from .fredholm import make_grid
from .specfun import airy_tail, contour_fun, default_painleve, hermite_functions

__all__ = [
    "PAINLEVE",
    "FREDHOLM",
    "airy_kernel",
    "airy_kernel_dy",
    "airy_kernel_tail",
    "gse_blocks",
    "gse1_blocks",
    "f_gue",
    "f_goe",
    "f_gse",
    "f_gue_t",
    "f_gse1",
    "g_t",
    "gaussian_cdf",
    "resolvent_checks",
    "get",
    "clear_cache",
    "tabulated_cdf",
]

PAINLEVE = "painleve"
FREDHOLM = "fredholm"

T_MIN = -8.0
_UPPER = 10.0  # the truncated interval always reaches at least this far

# s-quadrature for K(x, y) = int_0^inf Ai(x+s) Ai(y+s) ds; Ai(-8 + 32) ~ 1e-34
_S_NODES, _S_WEIGHTS = leggauss(200)
_S_MAX = 32.0
_S = 0.5 * _S_MAX * (_S_NODES + 1.0)
_WS = 0.5 * _S_MAX * _S_WEIGHTS


def _check_T(T: float) -> None:
    if not np.isfinite(T):
        raise ValueError("T must be finite")
    if T < T_MIN:
        raise ValueError(f"T = {T} is below the tabulated range (T >= {T_MIN})")


def _shift(x):
    return np.asarray(x, dtype=float)[..., None] + _S


def airy_kernel(x, y):
    """K_Airy(x, y), broadcasting over ``x`` and ``y``."""
    return np.einsum("...k,...k,k->...", airy(_shift(x))[0], airy(_shift(y))[0], _WS)


def airy_kernel_dy(x, y):
    """Partial derivative of K_Airy(x, y) in ``y``."""
    return np.einsum("...k,...k,k->...", airy(_shift(x))[0], airy(_shift(y))[1], _WS)


def airy_kernel_tail(x, y):
    """int_x^inf K_Airy(t, y) dt = int_0^inf B(x+s) Ai(y+s) ds."""
    return np.einsum("...k,...k,k->...", airy_tail(_shift(x)), airy(_shift(y))[0], _WS)


def _airy_matrices(xi: np.ndarray):
    """K, dK/dy and the t-integral of K on the node vector ``xi``."""
    A, Ap = airy(_shift(xi))[:2]
    Bs = airy_tail(_shift(xi))
    Aw = A * _WS
    return Aw @ A.T, Aw @ Ap.T, (Bs * _WS) @ A.T


def gse_blocks(xi: np.ndarray):
    """Blocks (S4, SD4, IS4) of the F_GSE kernel evaluated on ``xi`` x ``xi``."""
    K, dK, IK = _airy_matrices(xi)
    ai = airy(xi)[0]
    B = airy_tail(xi)
    S4 = 0.5 * K - 0.25 * np.outer(ai, B)
    SD4 = -0.5 * dK - 0.25 * np.outer(ai, ai)
    IS4 = -0.5 * IK + 0.25 * np.outer(B, B)
    return S4, SD4, IS4


def gse1_blocks(xi: np.ndarray):
    """Blocks of the F_GSE1 kernel, before conjugation."""
    S4, SD4, IS4 = gse_blocks(xi)
    ai = airy(xi)[0]
    B = airy_tail(xi)
    return S4 + 0.5 * ai[:, None], SD4, IS4 - 0.5 * B[:, None] + 0.5 * B[None, :]


def _block_det(S, SD, IS, grid, d1=None, d2=None) -> float:
    """det(I - [[S, SD], [IS, S^T]]) with optional diagonal conjugation."""
    n = grid.order
    if d1 is None:
        d1 = d2 = np.ones(n)
    sw = np.concatenate([grid.sqrt_weights] * 2)
    A = np.block([
        [d1[:, None] * S / d1[None, :], d1[:, None] * SD / d2[None, :]],
        [d2[:, None] * IS / d1[None, :], d2[:, None] * S.T / d2[None, :]],
    ])
    if not np.all(np.isfinite(A)):
        raise fredholm.KernelEvaluationError("matrix kernel is not finite on the grid")
    return float(np.linalg.det(np.eye(2 * n) - sw[:, None] * A * sw[None, :]))


def _sqrt_det(d: float, T: float) -> float:
    if d < -1e-10:
        raise ArithmeticError(f"negative matrix Fredholm determinant {d:.3e} at T = {T}")
    return float(np.sqrt(max(d, 0.0)))


def _grid(T: float, order: int, L: float):
    return make_grid(T, order, max(L, _UPPER - T))


# ---------------------------------------------------------------------------
# cache
# ---------------------------------------------------------------------------

_CACHE: dict = {}
_LOCK = threading.Lock()


def _cached(key, compute: Callable[[], float]) -> float:
    with _LOCK:
        if key in _CACHE:
            return _CACHE[key]
    value = compute()
    with _LOCK:
        _CACHE.setdefault(key, value)
    return value


def clear_cache() -> None:
    with _LOCK:
        _CACHE.clear()


# ---------------------------------------------------------------------------
# distributions
# ---------------------------------------------------------------------------

def _painleve_columns(T: float):
    sol = default_painleve()
    return sol(T, "I1"), sol(T, "I2")


def f_gue(T: float, backend: str = PAINLEVE, order: int = fredholm.DEFAULT_ORDER,
          L: float = fredholm.DEFAULT_L) -> float:
    """F_GUE(T)."""
    _check_T(T)
    if backend == PAINLEVE:
        return _cached(("gue", backend, T), lambda: float(np.exp(-_painleve_columns(T)[0])))
    if backend == FREDHOLM:
        def compute():
            grid = _grid(T, order, L)
            K = _airy_matrices(grid.nodes)[0]
            sw = grid.sqrt_weights
            return float(np.linalg.det(np.eye(grid.order) - sw[:, None] * K * sw[None, :]))
        return _cached(("gue", backend, order, L, T), compute)
    raise ValueError(f"backend {backend!r} is not available for F_GUE")


def f_goe(T: float) -> float:
    """F_GOE(T) from the Painleve formula."""
    _check_T(T)

    def compute():
        I1, I2 = _painleve_columns(T)
        return float(np.exp(-0.5 * I1 - 0.5 * I2))

    return _cached(("goe", PAINLEVE, T), compute)


def f_gse(T: float, backend: str = PAINLEVE, order: int = fredholm.DEFAULT_ORDER,
          L: float = fredholm.DEFAULT_L) -> float:
    """F_GSE(T)."""
    _check_T(T)
    if backend == PAINLEVE:
        def compute():
            I1, I2 = _painleve_columns(T)
            return float(0.5 * np.exp(-0.5 * I1) * (np.exp(-0.5 * I2) + np.exp(0.5 * I2)))
        return _cached(("gse", backend, T), compute)
    if backend == FREDHOLM:
        def compute():
            grid = _grid(T, order, L)
            return _sqrt_det(_block_det(*gse_blocks(grid.nodes), grid), T)
        return _cached(("gse", backend, order, L, T), compute)
    raise ValueError(f"backend {backend!r} is not available for F_GSE")


def f_gse1(T: float, order: int = fredholm.DEFAULT_ORDER, L: float = fredholm.DEFAULT_L) -> float:
    """F_GSE1(T) as a square-rooted 2x2 matrix Fredholm determinant.

    The rank-one pieces Ai(x) and B(y) are not trace class on their own, so
    the kernel is conjugated by diag(e^{x/3}, e^{-x/3}).
    """
    _check_T(T)

    def compute():
        grid = _grid(T, order, L)
        e = np.exp(grid.nodes / 3.0)
        return _sqrt_det(_block_det(*gse1_blocks(grid.nodes), grid, e, 1.0 / e), T)

    return _cached(("gse1", FREDHOLM, order, L, T), compute)


def gue_t_kernel(t: int) -> Callable:
    """The conjugated kernel e^{x/3} (K_Airy + sum_j t^(j)(x) s^(j)(y)) e^{-y/3}."""
    if t < 0:
        raise ValueError("t must be nonnegative")

    def K(x, y):
        val = airy_kernel(x, y)
        for j in range(1, t + 1):
            val = val + contour_fun(j, x, "t") * contour_fun(j, y, "s")
        return np.exp((np.asarray(x) - np.asarray(y)) / 3.0) * val

    return K


def f_gue_t(T: float, t: int, order: int = fredholm.DEFAULT_ORDER,
            L: float = fredholm.DEFAULT_L) -> float:
    """F_GUE*t(T), the critical-regime limit for t spikes at the threshold."""
    _check_T(T)
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")

    def compute():
        grid = _grid(T, order, L)
        x = grid.nodes
        K = _airy_matrices(x)[0]
        for j in range(1, t + 1):
            K = K + np.outer(contour_fun(j, x, "t"), contour_fun(j, x, "s"))
        e = np.exp(x / 3.0)
        A = e[:, None] * K / e[None, :]
        sw = grid.sqrt_weights
        return float(np.linalg.det(np.eye(grid.order) - sw[:, None] * A * sw[None, :]))

    return _cached(("gue_t", t, FREDHOLM, order, L, T), compute)


def g_t(T: float, t: int, order: int = fredholm.DEFAULT_ORDER) -> float:
    """G_t(T): finite-rank Hermite kernel determinant.

    Equals the distribution of the largest eigenvalue of a t x t GUE matrix
    with density proportional to exp(-tr H^2 / 2).
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if not np.isfinite(T):
        raise ValueError("T must be finite")

    def compute():
        upper = 12.0 + 2.0 * np.sqrt(t)
        if T >= upper:
            return 1.0
        lo = max(T, -upper)
        # panels keep the Gaussian tails resolved over long intervals
        panels = int(np.ceil((upper - lo) / 6.0))
        edges = np.linspace(lo, upper, panels + 1)
        nodes, weights = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            g = make_grid(a, order, b - a)
            nodes.append(g.nodes)
            weights.append(g.weights)
        x, w = np.concatenate(nodes), np.concatenate(weights)
        H = hermite_functions(t, x)
        gram = (H * w) @ H.T
        # clip roundoff in the far left tail
        return max(float(np.linalg.det(np.eye(t) - gram)), 0.0)

    return _cached(("g_t", t, order, T), compute)


def gaussian_cdf(T: float) -> float:
    return float(ndtr(T))


def resolvent_checks(T: float, order: int = fredholm.DEFAULT_ORDER,
                     L: float = fredholm.DEFAULT_L) -> dict:
    """Solve (I - K)u = s^(1) on [T, inf) and report u(T) and <u, Ai>.

    The Painlevé predictions are u(T) = e^{-I2(T)} and <u, Ai> = 1 - e^{-I2(T)}.
    """
    _check_T(T)
    grid = _grid(T, order, L)
    x, w = grid.nodes, grid.weights
    K = _airy_matrices(x)[0]
    s1 = 1.0 - airy_tail(x)
    u = np.linalg.solve(np.eye(grid.order) - K * w[None, :], s1)
    u_T = float(1.0 - airy_tail(T) + (airy_kernel(np.array(T), x) * w) @ u)
    inner = float((u * airy(x)[0]) @ w)
    I2 = _painleve_columns(T)[1]
    return {
        "u_T": u_T,
        "inner": inner,
        "expected_u_T": float(np.exp(-I2)),
        "expected_inner": float(1.0 - np.exp(-I2)),
    }


def get(name: str, t: int | None = None) -> Callable[[float], float]:
    """Look up a distribution by its CLI name, returning a function of T."""
    name = name.lower()
    table = {
        "gue": f_gue,
        "goe": f_goe,
        "gse": f_gse,
        "gse1": f_gse1,
        "normal": gaussian_cdf,
    }
    if name in table:
        return table[name]
    if name in ("gue_t", "g_t"):
        if t is None or t < 1:
            raise ValueError(f"distribution {name} needs t >= 1")
        fn = f_gue_t if name == "gue_t" else g_t
        return lambda T: fn(T, t)
    raise ValueError(f"unknown distribution {name!r}")


def tabulated_cdf(name: str, t: int | None = None, lo: float = T_MIN, hi: float = 6.0,
                  step: float = 0.05) -> Callable:
    """Vectorized monotone interpolant of a distribution on [lo, hi].

    Values are clamped to F(lo) below the table and 1 above it; used when
    many evaluations are needed (KS statistics, histograms).
    """
    from scipy.interpolate import PchipInterpolator

    fn = get(name, t)
    grid = np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)
    vals = np.array([fn(float(T)) for T in grid])
    interp = PchipInterpolator(grid, vals, extrapolate=False)

    def cdf(x):
        xa = np.asarray(x, dtype=float)
        out = interp(np.clip(xa, lo, hi))
        out = np.where(xa > hi, 1.0, out)
        out = np.clip(out, 0.0, 1.0)
        return float(out) if xa.ndim == 0 else out

    return cdf
