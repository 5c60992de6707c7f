"""Special functions used by the edge-scaling limits.

Airy function and its tail integral, the contour families ``s^(j)`` and
``t^(j)``, probabilists' Hermite and generalized Laguerre polynomials, and the
Hastings-McLeod solution of Painleve II together with the two cumulative
integrals that enter the Tracy-Widom formulas.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special
from scipy.integrate import solve_ivp
from scipy.interpolate import BPoly, CubicHermiteSpline

ArrayLike = Union[float, np.ndarray]

__all__ = [
    "PainleveError",
    "PainleveSolution",
    "airy_ai",
    "airy_ai_prime",
    "airy_derivative",
    "airy_tail",
    "contour_fun",
    "hermite",
    "hermite_functions",
    "laguerre",
    "laguerre_table",
    "laguerre_functions",
    "log_factorial",
    "solve_painleve",
    "default_painleve",
]


class PainleveError(RuntimeError):
    """Raised when the backward integration leaves the Hastings-McLeod branch."""

    def __init__(self, message: str, last_valid_x: float):
        super().__init__(f"{message} (last valid x = {last_valid_x:.6g})")
        self.last_valid_x = last_valid_x


# ---------------------------------------------------------------------------
# Airy
# ---------------------------------------------------------------------------

def airy_ai(x: ArrayLike) -> ArrayLike:
    """Ai(x) for real ``x`` (scalar or array)."""
    return special.airy(x)[0]


def airy_ai_prime(x: ArrayLike) -> ArrayLike:
    """Ai'(x) for real ``x``."""
    return special.airy(x)[1]


def airy_derivative(order: int, x: ArrayLike) -> ArrayLike:
    """The ``order``-th derivative of Ai, from Ai'' = x Ai.

    Writing Ai^(n) = p_n(x) Ai + r_n(x) Ai', the polynomial pair obeys
    p_{n+1} = p_n' + x r_n and r_{n+1} = p_n + r_n'.
    """
    if order < 0:
        raise ValueError("derivative order must be nonnegative")
    x = np.asarray(x, dtype=float)
    ai, aip = special.airy(x)[:2]
    p = np.polynomial.Polynomial([1.0])
    r = np.polynomial.Polynomial([0.0])
    xpoly = np.polynomial.Polynomial([0.0, 1.0])
    for _ in range(order):
        p, r = p.deriv() + xpoly * r, p + r.deriv()
    return p(x) * ai + r(x) * aip


_GL16 = leggauss(16)


def _panel_integral(f, lo: np.ndarray, hi: np.ndarray, panels: int) -> np.ndarray:
    """Composite 16-point Gauss-Legendre of ``f`` over [lo, hi], elementwise."""
    nodes, weights = _GL16
    edges = lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, panels + 1)[None, :]
    a, b = edges[:, :-1], edges[:, 1:]
    half = 0.5 * (b - a)
    t = 0.5 * (a + b)[..., None] + half[..., None] * nodes
    return np.sum(f(t) * weights * half[..., None], axis=(-1, -2))


def _airy_tail_direct(x: np.ndarray) -> np.ndarray:
    """B(x) by composite Gauss-Legendre, elementwise on a 1-D array.

    Positive arguments integrate Ai over [x, x + 16] (the neglected remainder
    is below 1e-40 relative).  Negative arguments use B(x) = 1/3 + int_x^0 Ai,
    with panels no wider than about one unit to resolve the oscillation.
    """
    out = np.empty_like(x)
    pos = x >= 0
    if np.any(pos):
        xp = x[pos]
        out[pos] = _panel_integral(airy_ai, xp, xp + 16.0, 16)
    if np.any(~pos):
        xn = x[~pos]
        panels = max(4, int(np.ceil(np.max(-xn) * 1.5)))
        out[~pos] = 1.0 / 3.0 + _panel_integral(airy_ai, xn, np.zeros_like(xn), panels)
    return out


_TAIL_LO, _TAIL_HI, _TAIL_STEP = -12.0, 24.0, 0.02
_TAIL_TABLE: dict = {}


def _tail_interpolant() -> BPoly:
    """Quintic Hermite interpolant of B using B' = -Ai and B'' = -Ai'."""
    poly = _TAIL_TABLE.get("bpoly")
    if poly is None:
        n = int(round((_TAIL_HI - _TAIL_LO) / _TAIL_STEP))
        knots = np.linspace(_TAIL_LO, _TAIL_HI, n + 1)
        # integrals over each cell, accumulated downward from the top knot
        cells = _panel_integral(airy_ai, knots[:-1], knots[1:], 1)
        B = np.empty(n + 1)
        B[-1] = _airy_tail_direct(knots[-1:])[0]
        B[:-1] = B[-1] + np.cumsum(cells[::-1])[::-1]
        ai, aip = special.airy(knots)[:2]
        poly = BPoly.from_derivatives(knots, np.column_stack([B, -ai, -aip]))
        _TAIL_TABLE["bpoly"] = poly
    return poly


def airy_tail(x: ArrayLike) -> ArrayLike:
    """B(x) = integral of Ai over [x, inf).

    Arguments inside [-12, 24] use a quintic Hermite table built once from
    cell-wise Gauss-Legendre integrals of Ai.  Beyond 24 (where B < 3e-36) the
    two-term asymptotic series is used, and below -12 direct quadrature.
    """
    xa = np.asarray(x, dtype=float)
    x = np.atleast_1d(xa).ravel()
    inside = (x >= _TAIL_LO) & (x <= _TAIL_HI)
    high = x > _TAIL_HI
    low = x < _TAIL_LO
    out = np.empty_like(x)
    if np.any(inside):
        out[inside] = _tail_interpolant()(x[inside])
    if np.any(high):
        xh = x[high]
        zeta = 2.0 / 3.0 * xh**1.5
        out[high] = np.exp(-zeta) * xh**-0.75 / (2 * np.sqrt(np.pi)) * (1 - 41.0 / (48.0 * zeta))
    if np.any(low):
        out[low] = _airy_tail_direct(x[low])
    return float(out[0]) if xa.ndim == 0 else out.reshape(xa.shape)


# ---------------------------------------------------------------------------
# contour families s^(j), t^(j)
# ---------------------------------------------------------------------------

_INDENT = 0.25  # radius of the detour below z = 0


def _contour_nodes(x_min: float, j: int, kind: str):
    """Nodes and complex weights dz along ray(5pi/6) -> arc -> ray(pi/6)."""
    # |exp(ixz + iz^3/3)| = exp(-x r/2 - r^3/3) on both rays
    R = 2.0
    while -0.5 * x_min * R - R**3 / 3.0 + max(j, 1) * np.log(R) > -45.0:
        R += 0.25
    n_panels = int(np.ceil((R - _INDENT) / 0.4))
    nodes, weights = leggauss(20)
    edges = np.linspace(_INDENT, R, n_panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    r = (0.5 * (a + b) + 0.5 * (b - a) * nodes).ravel()
    wr = (0.5 * (b - a) * weights).ravel()

    e_in, e_out = np.exp(5j * np.pi / 6), np.exp(1j * np.pi / 6)
    z_in, w_in = r * e_in, -wr * e_in  # traversed inward, from R down to the indent
    z_out, w_out = r * e_out, wr * e_out

    # counterclockwise from 5pi/6 through 3pi/2 to 13pi/6: passes below the pole
    th_nodes, th_weights = leggauss(48)
    lo, hi = 5 * np.pi / 6, 13 * np.pi / 6
    th = 0.5 * (lo + hi) + 0.5 * (hi - lo) * th_nodes
    z_arc = _INDENT * np.exp(1j * th)
    w_arc = 0.5 * (hi - lo) * th_weights * 1j * z_arc
    return (np.concatenate([z_in, z_arc, z_out]), np.concatenate([w_in, w_arc, w_out]))


def contour_fun(j: int, x: ArrayLike, kind: str = "t") -> ArrayLike:
    """Evaluate ``s^(j)(x)`` (``kind='s'``) or ``t^(j)(x)`` (``kind='t'``).

    Both are (1/2pi) int exp(ixz + iz^3/3) h(z) dz from infinity e^{5pi i/6}
    to infinity e^{pi i/6}, with h(z) = (iz)^{-j} for s and (-iz)^{j-1} for t.
    The path runs along the two rays and detours below z = 0 on a circle of
    radius 1/4, so it stays below the pole of the s-integrand.
    """
    if j < 1:
        raise ValueError(f"contour index must be >= 1, got {j}")
    if kind not in ("s", "t"):
        raise ValueError(f"kind must be 's' or 't', got {kind!r}")
    xa = np.asarray(x, dtype=float)
    flat = np.atleast_1d(xa).ravel()
    z, dz = _contour_nodes(float(np.min(flat)), j, kind)
    h = (1j * z) ** (-j) if kind == "s" else (-1j * z) ** (j - 1)
    phase = np.exp(1j * flat[:, None] * z[None, :] + 1j * z[None, :] ** 3 / 3.0)
    val = (phase @ (h * dz)).real / (2 * np.pi)
    return float(val[0]) if xa.ndim == 0 else val.reshape(xa.shape)


# ---------------------------------------------------------------------------
# orthogonal polynomials
# ---------------------------------------------------------------------------

def log_factorial(n: ArrayLike) -> ArrayLike:
    """log(n!) via log-gamma; accepts non-integer arguments as Gamma(n+1)."""
    return special.gammaln(np.asarray(n, dtype=float) + 1.0)


def hermite(j: int, x: ArrayLike) -> ArrayLike:
    """Probabilists' Hermite polynomial He_j(x) by three-term recurrence."""
    if j < 0:
        raise ValueError("degree must be nonnegative")
    x = np.asarray(x, dtype=float)
    h_prev, h = np.zeros_like(x), np.ones_like(x)
    for k in range(j):
        h_prev, h = h, x * h - k * h_prev
    return h


def hermite_functions(t: int, x: ArrayLike) -> np.ndarray:
    """Rows j = 0..t-1 of He_j(x) exp(-x^2/4) / sqrt(j! sqrt(2 pi)).

    These are orthonormal on the real line; computed with the normalized
    recurrence so that large j does not overflow.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((t,) + x.shape)
    if t == 0:
        return out
    out[0] = np.exp(-0.25 * x**2) / np.sqrt(np.sqrt(2 * np.pi))
    if t > 1:
        out[1] = x * out[0]
    for k in range(1, t - 1):
        out[k + 1] = (x * out[k] - np.sqrt(k) * out[k - 1]) / np.sqrt(k + 1)
    return out


def laguerre(n: int, alpha: float, x: ArrayLike) -> ArrayLike:
    """Generalized Laguerre polynomial L_n^(alpha)(x)."""
    if alpha <= -1:
        raise ValueError(f"alpha must exceed -1, got {alpha}")
    if n < 0:
        return np.zeros_like(np.asarray(x, dtype=float))
    return laguerre_table(n, alpha, x)[n]


def laguerre_table(nmax: int, alpha: float, x: ArrayLike) -> np.ndarray:
    """All L_0^(alpha)..L_nmax^(alpha) at ``x``, shape (nmax+1,) + x.shape."""
    if alpha <= -1:
        raise ValueError(f"alpha must exceed -1, got {alpha}")
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = 1.0
    if nmax >= 1:
        out[1] = 1.0 + alpha - x
    for k in range(1, nmax):
        out[k + 1] = ((2 * k + 1 + alpha - x) * out[k] - (k + alpha) * out[k - 1]) / (k + 1)
    return out


def laguerre_functions(kmax: int, alpha: float, y: ArrayLike) -> np.ndarray:
    """Orthonormal Laguerre functions on (0, inf), rows k = 0..kmax.

    l_k(y) = sqrt(k!/Gamma(k+alpha+1)) L_k^(alpha)(y) y^(alpha/2) e^(-y/2),
    built with the normalized recurrence so that large alpha and k neither
    overflow nor underflow in the edge region.
    """
    if alpha <= -1:
        raise ValueError(f"alpha must exceed -1, got {alpha}")
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("Laguerre functions need y > 0")
    out = np.empty((kmax + 1,) + y.shape)
    out[0] = np.exp(0.5 * alpha * np.log(y) - 0.5 * y - 0.5 * special.gammaln(alpha + 1))
    if kmax >= 1:
        out[1] = (1 + alpha - y) * out[0] / np.sqrt(1 + alpha)
    for k in range(1, kmax):
        out[k + 1] = ((2 * k + 1 + alpha - y) * out[k]
                      - np.sqrt(k * (k + alpha)) * out[k - 1]) / np.sqrt((k + 1) * (k + 1 + alpha))
    return out


# ---------------------------------------------------------------------------
# Painleve II, Hastings-McLeod
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PainleveSolution:
    """Tabulated Hastings-McLeod solution on a descending grid.

    ``I1(x) = int_x^inf (t - x) q(t)^2 dt`` and ``I2(x) = int_x^inf q(t) dt``.
    Off-grid values come from cubic Hermite interpolation using the exact
    derivatives ``I2' = -q`` and ``I1' = -(q'^2 - x q^2 - q^4)``.
    """

    grid: np.ndarray
    q: np.ndarray
    qp: np.ndarray
    I1: np.ndarray
    I2: np.ndarray

    def __post_init__(self):
        g = self.grid
        if g.ndim != 1 or len(g) < 2 or not np.all(np.diff(g) < 0):
            raise ValueError("Painleve grid must be strictly descending")
        for name in ("q", "qp", "I1", "I2"):
            if getattr(self, name).shape != g.shape:
                raise ValueError(f"column {name} does not match the grid")

    @property
    def x_min(self) -> float:
        return float(self.grid[-1])

    @property
    def x_max(self) -> float:
        return float(self.grid[0])

    def _splines(self):
        cache = self.__dict__.get("_spl")
        if cache is None:
            x = self.grid[::-1]
            q, qp = self.q[::-1], self.qp[::-1]
            J = qp**2 - x * q**2 - q**4
            cache = {
                "q": CubicHermiteSpline(x, q, qp),
                "qp": CubicHermiteSpline(x, qp, x * q + 2 * q**3),
                "I1": CubicHermiteSpline(x, self.I1[::-1], -J),
                "I2": CubicHermiteSpline(x, self.I2[::-1], -q),
            }
            object.__setattr__(self, "_spl", cache)
        return cache

    def __call__(self, x: ArrayLike, column: str = "q") -> ArrayLike:
        """Interpolate one column at ``x``; beyond ``x_max`` the Airy tail is used."""
        xa = np.asarray(x, dtype=float)
        if np.any(xa < self.x_min - 1e-12):
            raise ValueError(f"x below tabulated range [{self.x_min}, {self.x_max}]")
        inside = np.minimum(xa, self.x_max)
        val = self._splines()[column](inside)
        above = xa > self.x_max
        if np.any(above):
            tail = _airy_tails(xa[above] if xa.ndim else xa)
            if xa.ndim:
                val = np.array(val)
                val[above] = tail[column]
            else:
                val = tail[column]
        return val if xa.ndim else float(val)

    def to_csv(self, path: Union[str, Path, None] = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "q", "qp", "I1", "I2"])
        for row in zip(self.grid, self.q, self.qp, self.I1, self.I2):
            w.writerow([f"{v:.17g}" for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source: Union[str, Path]) -> "PainleveSolution":
        """Load from a path or CSV text; the grid must be strictly descending."""
        text = str(source)
        if "\n" not in text:
            text = Path(source).read_text()
        rows = list(csv.reader(io.StringIO(text)))
        if rows[0] != ["x", "q", "qp", "I1", "I2"]:
            raise ValueError(f"unexpected header {rows[0]}")
        data = np.array([[float(v) for v in r] for r in rows[1:]])
        return cls(*(data[:, k].copy() for k in range(5)))


def _airy_tails(x):
    """Columns of the solution for x beyond the seeding point, where q = Ai."""
    ai, aip = special.airy(x)[:2]
    return {
        "q": ai,
        "qp": aip,
        "I2": airy_tail(x),
        "I1": (2 * x**2 * ai**2 - 2 * x * aip**2 - ai * aip) / 3.0,
    }


def solve_painleve(x_min: float = -10.0, x_max: float = 10.0, step: float = 0.01) -> PainleveSolution:
    """Integrate q'' = x q + 2 q^3 backward from Airy data at ``x_max``.

    I1 and I2 are carried along as extra components of the state, seeded with
    their exact Airy-tail values at ``x_max``.
    """
    if x_max < 8:
        raise ValueError("x_max must be >= 8 so that q ~ Ai holds to double precision")
    if x_min < -10:
        raise ValueError("x_min must be >= -10")
    if step <= 0 or step > 0.01:
        raise ValueError("step must lie in (0, 0.01]")

    n = int(round((x_max - x_min) / step))
    grid = x_max - step * np.arange(n + 1)
    grid[-1] = max(grid[-1], x_min)
    seed = _airy_tails(np.array(x_max))

    def rhs(x, y):
        q, qp, _, _ = y
        return [qp, x * q + 2 * q**3, -q, -(qp**2 - x * q**2 - q**4)]

    def negative(x, y):
        return y[0]

    negative.terminal = True
    sol = solve_ivp(
        rhs,
        (x_max, grid[-1]),
        [float(seed["q"]), float(seed["qp"]), float(seed["I2"]), float(seed["I1"])],
        method="DOP853",
        t_eval=grid,
        rtol=1e-13,
        atol=1e-18,
        max_step=step,
        events=negative,
    )
    if sol.status != 0 or len(sol.t) != len(grid) or not np.all(np.isfinite(sol.y)):
        last = float(sol.t[-1]) if len(sol.t) else x_max
        raise PainleveError("Painleve integration left the Hastings-McLeod branch", last)
    q, qp, I2, I1 = sol.y
    if np.any(q <= 0):
        bad = int(np.argmax(q <= 0))
        raise PainleveError("q lost positivity", float(grid[max(bad - 1, 0)]))
    return PainleveSolution(grid=grid, q=q, qp=qp, I1=I1, I2=I2)


_DEFAULT: dict = {}


def default_painleve() -> PainleveSolution:
    """Shared solution on [-10, 10] with step 0.01 (built once per process)."""
    sol = _DEFAULT.get("sol")
    if sol is None:
        sol = _DEFAULT.setdefault("sol", solve_painleve())
    return sol
