"""Finite-N correlation kernels and gap probabilities for spiked Wishart ensembles.

Two exactly solvable systems are provided:

* ``ComplexSpikedSystem`` (beta = 2, any rank): the biorthonormal pair
  phi_j / psi_tilde_j.  The first N - r functions are Laguerre polynomials and
  the remaining r are contour integrals, evaluated by the trapezoid rule on
  circles in log space.
* ``QuaternionSkewSystem`` (beta = 4, rank <= 1): skew-orthogonal functions
  psi_i = phi_i x^(M-N+1/2) e^(-Mx).  They are stored as coefficient vectors
  over orthonormal Laguerre functions in y = 2Mx, which keeps large M stable.

Both give P(max eigenvalue <= T) as a finite-rank determinant over [T, inf).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln, roots_laguerre

from . import distributions as dist
from .ensembles import DivisionAlgebra, ModelParams, Regime, SpikeSpec, classify_regime
from .fredholm import QuadratureGrid, det_matrix2
from .specfun import laguerre, laguerre_functions

__all__ = [
    "ContourConvergenceError",
    "ComplexSpikedSystem",
    "QuaternionSkewSystem",
    "ProbeRow",
    "phi",
    "psi_tilde",
    "biorthonormality_check",
    "kernel_k2",
    "gap_probability_complex",
    "skew_basis",
    "kernel_s4",
    "gap_probability_quaternion",
    "convergence_probe",
    "joint_pdf_rank1",
    "max_cdf_two_by_quadrature",
    "composite_gauss_legendre",
]

_PANEL_ORDER = 20
_GL_X, _GL_W = leggauss(_PANEL_ORDER)


class ContourConvergenceError(ArithmeticError):
    """Trapezoid sums on a circle did not settle within the node budget."""


def composite_gauss_legendre(lo: float, hi: float, panels: int,
                             order: int = _PANEL_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of ``panels`` equal Gauss-Legendre panels on [lo, hi]."""
    if hi <= lo:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    if order == _PANEL_ORDER:
        gx, gw = _GL_X, _GL_W
    else:
        gx, gw = leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    weights = (half[:, None] * gw[None, :]).ravel()
    return nodes, weights


def _tail_cutoff(T: float, power: float, rate: float, degree: int, drop: float = 46.0) -> float:
    """A point U > T beyond which x^power (1+x)^degree e^(-rate x) is e^-drop below its peak."""
    def env(x):
        return power * math.log(x) + degree * math.log1p(x) - rate * x

    peak = max((power + degree) / rate, 1e-3)
    start = max(T, 1e-3)
    ref = env(max(start, peak))
    U = max(start, peak) + 1.0 / rate
    while env(U) > ref - drop:
        U += max(0.25 * U, 1.0 / rate)
    return U


def _signed_log(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    with np.errstate(divide="ignore"):
        return np.sign(values), np.log(np.abs(values))


def _exp_signed(sign: np.ndarray, logabs: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return sign * np.exp(logabs)


# ---------------------------------------------------------------------------
# trapezoid contour integrals in log space
# ---------------------------------------------------------------------------

LogIntegrand = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _contour_integral(logint: LogIntegrand, x: np.ndarray, center: float, radii: np.ndarray,
                      nodes: int = 256, max_nodes: int = 1 << 15,
                      tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Real part of (1/2 pi i) closed integral of exp(logint(z, x)) dz; returns (sign, log|.|).

    One circle per x (``radii`` has the shape of ``x``).  Nodes are doubled
    until consecutive trapezoid values agree to ``tol`` relative, or to
    roundoff relative to the largest term on the circle.
    """
    x = np.asarray(x, dtype=float).ravel()
    radii = np.broadcast_to(np.asarray(radii, dtype=float), x.shape)

    def trapezoid(n):
        theta = 2 * np.pi * np.arange(n) / n
        offset = radii[:, None] * np.exp(1j * theta)[None, :]
        L = logint(center + offset, x[:, None]) + np.log(offset)
        shift = L.real.max(axis=1)
        S = np.exp(L - shift[:, None]).mean(axis=1)
        return S.real, shift

    n = nodes
    prev, shift = trapezoid(n)
    while True:
        n *= 2
        cur, shift2 = trapezoid(n)
        cur_in_prev = cur * np.exp(shift2 - shift)
        ok = np.abs(cur_in_prev - prev) <= tol * np.abs(cur_in_prev) + 1e-13 * np.exp(shift2 - shift)
        prev, shift = cur, shift2
        if np.all(ok):
            break
        if n >= max_nodes:
            raise ContourConvergenceError(f"trapezoid rule did not settle with {n} nodes")
    sign, logabs = _signed_log(prev)
    return sign, logabs + shift


def _min_max_radius(logint: LogIntegrand, x: np.ndarray, center: float,
                    candidates: np.ndarray, probe_nodes: int = 64) -> np.ndarray:
    """Per-x circle radius minimizing the largest integrand modulus on the circle."""
    x = np.asarray(x, dtype=float).ravel()
    theta = 2 * np.pi * (np.arange(probe_nodes) + 0.5) / probe_nodes
    ring = np.exp(1j * theta)
    best = np.empty_like(x)
    for lo in range(0, len(x), 128):
        xs = x[lo:lo + 128]
        offset = candidates[None, :, None] * ring[None, None, :]
        L = logint(center + offset, xs[:, None, None]) + np.log(offset)
        peak = L.real.max(axis=2)
        best[lo:lo + 128] = candidates[np.argmin(peak, axis=1)]
    return best


def _cluster_poles(poles: Sequence[float], ratio: float = 0.2) -> list[list[float]]:
    """Group sorted poles whose gaps are below ``ratio`` times the smaller pole.

    Separate circles around nearly coincident poles cancel catastrophically,
    so close poles share one circle.
    """
    groups = [[poles[0]]]
    for p in poles[1:]:
        if p - groups[-1][-1] < ratio * groups[-1][-1]:
            groups[-1].append(p)
        else:
            groups.append([p])
    return groups


# ---------------------------------------------------------------------------
# complex spiked system
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpikeIndex:
    """r' (1-based) with its value block s' (0-based) and position t' (1-based)."""

    r_prime: int
    s_prime: int
    t_prime: int


class ComplexSpikedSystem:
    """Biorthonormal multiple-Laguerre system for the complex spiked Wishart ensemble."""

    def __init__(self, params: ModelParams, spikes: SpikeSpec, radius_mode: str = "adaptive",
                 sigma_radius: float | None = None, gamma_radius: float | None = None,
                 nodes: int = 256):
        if params.beta != 2:
            raise ValueError("the multiple-Laguerre system needs beta = 2")
        if radius_mode not in ("fixed", "adaptive"):
            raise ValueError(f"radius_mode must be 'fixed' or 'adaptive', got {radius_mode!r}")
        self.params = params
        self.spikes = spikes
        self.N, self.M = params.N, params.M
        self.alpha = self.M - self.N
        self.r = spikes.rank
        if self.r > self.N:
            raise ValueError(f"rank {self.r} exceeds N = {self.N}")
        self.radius_mode = radius_mode
        self.nodes = nodes
        self.c = tuple(1.0 / (1.0 + a) for a in spikes.values)
        self.index_map: tuple[SpikeIndex, ...] = tuple(
            SpikeIndex(sum(spikes.multiplicities[:s]) + t, s, t)
            for s, m in enumerate(spikes.multiplicities)
            for t in range(1, m + 1)
        )
        right = (1.0,) + self.c
        lo, hi = min(right), max(right)
        self.sigma_center = 0.0
        self.gamma_center = 0.5 * (lo + hi)
        self._gamma_half = 0.5 * (hi - lo)
        self._lo = lo
        self.sigma_radius = 0.5 * lo if sigma_radius is None else float(sigma_radius)
        self.gamma_radius = self._gamma_half + 0.25 * lo if gamma_radius is None else float(gamma_radius)
        self._check_radii()

    def _check_radii(self):
        poles = (1.0,) + self.c
        if not 0 < self.sigma_radius < self._lo:
            raise ValueError(
                f"Sigma radius {self.sigma_radius} must lie in (0, {self._lo}) to circle only z = 0"
            )
        for p in poles:
            if abs(abs(p - self.gamma_center) - self.gamma_radius) < 1e-9:
                raise ValueError(f"Gamma circle passes through the pole z = {p}")
        if self.gamma_radius <= self._gamma_half or self.gamma_radius >= self.gamma_center:
            raise ValueError("Gamma circle must enclose 1 and every 1/(1+a_j) and exclude 0")

    # -- index bookkeeping ------------------------------------------------

    def spike_index(self, j: int) -> SpikeIndex:
        k = j - (self.N - self.r)
        if not 0 <= k < self.r:
            raise IndexError(f"j = {j} is not a spike index")
        return self.index_map[k]

    def _check_j(self, j: int):
        if not 0 <= j < self.N:
            raise IndexError(f"need 0 <= j < N = {self.N}, got {j}")

    # -- contour integrands -------------------------------------------------

    def _sigma_logint(self, j: int) -> LogIntegrand:
        idx = self.spike_index(j)
        N, M, r = self.N, self.M, self.r
        mult = self.spikes.multiplicities
        c = self.c
        power = M - r + idx.r_prime

        def f(z, x):
            out = M * x * z + (N - r) * np.log(z - 1) - power * np.log(z)
            for s in range(idx.s_prime):
                out = out + mult[s] * np.log(z - c[s])
            if idx.t_prime > 1:
                out = out + (idx.t_prime - 1) * np.log(z - c[idx.s_prime])
            return out

        return f

    def _gamma_logint(self, j: int) -> LogIntegrand:
        idx = self.spike_index(j)
        N, M, r = self.N, self.M, self.r
        mult = self.spikes.multiplicities
        c = self.c
        power = M - r + idx.r_prime - 1

        def f(z, x):
            out = -M * x * z + power * np.log(z) - (N - r) * np.log(z - 1)
            for s in range(idx.s_prime):
                out = out - mult[s] * np.log(z - c[s])
            return out - idx.t_prime * np.log(z - c[idx.s_prime])

        return f

    def _sigma_radii(self, logint, x):
        if self.radius_mode == "fixed":
            return np.full(x.shape, self.sigma_radius)
        cand = self._lo * np.geomspace(1e-4, 0.95, 48)
        return _min_max_radius(logint, x, self.sigma_center, cand)

    def _gamma_radii(self, logint, x):
        if self.radius_mode == "fixed":
            return np.full(x.shape, self.gamma_radius)
        h, c0 = self._gamma_half, self.gamma_center
        cand = h + (c0 - h) * np.geomspace(1e-3, 0.97, 48)
        return _min_max_radius(logint, x, c0, cand)

    def _sigma_log(self, j, x):
        f = self._sigma_logint(j)
        return _contour_integral(f, x, self.sigma_center, self._sigma_radii(f, x), self.nodes)

    def _gamma_log(self, j, x):
        f = self._gamma_logint(j)
        if self.radius_mode == "fixed":
            return _contour_integral(f, x, self.gamma_center, self._gamma_radii(f, x), self.nodes)
        # one circle per pole cluster; their sum is homologous to the big circle
        poles = sorted(set((1.0,) + self.c[:self.spike_index(j).s_prime + 1]))
        parts = []
        for group in _cluster_poles(poles):
            center = 0.5 * (group[0] + group[-1])
            half = 0.5 * (group[-1] - group[0])
            room = min([center] + [abs(center - q) for q in poles if q not in group])
            cand = half + (room - half) * np.geomspace(1e-4, 0.9, 48)
            parts.append(_contour_integral(f, x, center, _min_max_radius(f, x, center, cand),
                                           self.nodes))
        top = np.max([lg for _, lg in parts], axis=0)
        top = np.where(np.isfinite(top), top, 0.0)
        total = sum(_exp_signed(sg, lg - top) for sg, lg in parts)
        sign, logabs = _signed_log(total)
        return sign, logabs + top

    # -- functions ----------------------------------------------------------

    def _log_h(self, j: int) -> float:
        """log of int L_j(Mx)^2 x^(M-N) e^(-Mx) dx."""
        return gammaln(self.alpha + j + 1) - gammaln(j + 1) - (self.alpha + 1) * math.log(self.M)

    def _log_weighted(self, j: int, x: np.ndarray):
        """Sign/log of f_j = phi_j w and g_j = psi_tilde_j w with w = x^(a/2) e^(-Mx/2)."""
        self._check_j(j)
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise ValueError("finite-N functions need x > 0")
        M, a2 = self.M, 0.5 * self.alpha
        if j < self.N - self.r:
            ell = math.sqrt(M) * laguerre_functions(j, self.alpha, M * x)[j]
            s, lg = _signed_log(ell)
            half = 0.5 * self._log_h(j)
            return s, lg + half, s, lg - half
        sf, lf = self._sigma_log(j, x)
        lf = lf - a2 * np.log(x) - 0.5 * M * x
        sg, lg = self._gamma_log(j, x)
        a_s = self.spikes.values[self.spike_index(j).s_prime]
        lg = lg + math.log(M / (1 + a_s)) + a2 * np.log(x) + 0.5 * M * x
        return sf, lf, sg, lg

    def phi(self, j: int, x) -> np.ndarray:
        self._check_j(j)
        x = np.asarray(x, dtype=float)
        if j < self.N - self.r:
            return laguerre(j, self.alpha, self.M * x)
        s, lg = self._sigma_log(j, x.ravel())
        return _exp_signed(s, lg - self.alpha * np.log(x.ravel())).reshape(x.shape)

    def psi_tilde(self, j: int, x) -> np.ndarray:
        self._check_j(j)
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise ValueError("psi_tilde needs x > 0")
        if j < self.N - self.r:
            return np.exp(-self._log_h(j)) * laguerre(j, self.alpha, self.M * x)
        s, lg = self._gamma_log(j, x.ravel())
        a_s = self.spikes.values[self.spike_index(j).s_prime]
        lg = lg + math.log(self.M / (1 + a_s)) + self.M * x.ravel()
        return _exp_signed(s, lg).reshape(x.shape)

    def leading_coefficient(self, j: int) -> float:
        """Coefficient of x^j in phi_j."""
        self._check_j(j)
        M, N, r = self.M, self.N, self.r
        if j < N - r:
            return (-M) ** j / math.factorial(j)
        idx = self.spike_index(j)
        deg = M - r + idx.r_prime - 1
        log_mag = deg * math.log(M) - gammaln(deg + 1)
        for s in range(idx.s_prime):
            log_mag -= self.spikes.multiplicities[s] * math.log1p(self.spikes.values[s])
        log_mag -= (idx.t_prime - 1) * math.log1p(self.spikes.values[idx.s_prime])
        return (-1) ** j * math.exp(log_mag)

    def weighted_table(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Rows f_j(x), g_j(x) with each pair rescaled by reciprocal constants.

        Products f_j(x) g_j(y) are unchanged, so kernels and determinants built
        from the table are exact; only overflow is avoided.
        """
        x = np.asarray(x, dtype=float).ravel()
        F = np.empty((self.N, len(x)))
        G = np.empty_like(F)
        for j in range(self.N):
            sf, lf, sg, lg = self._log_weighted(j, x)
            finite_f = lf[np.isfinite(lf)]
            finite_g = lg[np.isfinite(lg)]
            shift = 0.0
            if finite_f.size and finite_g.size:
                shift = 0.5 * (finite_f.max() - finite_g.max())
            F[j] = _exp_signed(sf, lf - shift)
            G[j] = _exp_signed(sg, lg + shift)
        return F, G

    # -- kernels --------------------------------------------------------------

    def _kernel_sum(self, x, y, rows: slice):
        bx, by = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        ux, ix = np.unique(bx, return_inverse=True)
        uy, iy = np.unique(by, return_inverse=True)
        both = np.concatenate([ux, uy])
        F, G = self.weighted_table(both)
        Fx, Gy = F[rows, :len(ux)], G[rows, len(ux):]
        return np.einsum("jk,jk->k", Fx[:, ix.ravel()], Gy[:, iy.ravel()]).reshape(bx.shape)

    def kernel_k2a(self, x, y) -> np.ndarray:
        """Laguerre part sum_{j < N-r} f_j(x) g_j(y)."""
        return self._kernel_sum(x, y, slice(0, self.N - self.r))

    def kernel_k2b(self, x, y) -> np.ndarray:
        """Spike part sum_{j >= N-r} f_j(x) g_j(y)."""
        return self._kernel_sum(x, y, slice(self.N - self.r, self.N))

    def kernel_k2(self, x, y) -> np.ndarray:
        return self._kernel_sum(x, y, slice(0, self.N))

    def kernel_k2a_integral(self, x, y, t_nodes: int | None = None) -> np.ndarray:
        """The Laguerre part as a t-integral of a product of two contour integrals.

        The Gamma factor carries the first argument and the Sigma factor the
        second.
        """
        M, N, r, alpha = self.M, self.N, self.r, self.alpha
        if N - r == 0:
            return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)
        bx, by = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        n = t_nodes or (M + N + 8)
        s, w = roots_laguerre(n)
        t = s / M
        logw = np.log(w) - math.log(M) + s

        def gamma_int(z, u):
            return -M * u * z + (M - r) * np.log(z) - (N - r) * np.log(z - 1)

        def sigma_int(z, u):
            return M * u * z + (N - r) * np.log(z - 1) - (M - r) * np.log(z)

        out = np.empty(bx.size)
        for k, (xv, yv) in enumerate(zip(bx.ravel(), by.ravel())):
            ug = xv + t
            us = yv + t
            rg = _min_max_radius(gamma_int, ug, 1.0, np.geomspace(1e-3, 0.97, 48))
            rs = _min_max_radius(sigma_int, us, 0.0, np.geomspace(1e-4, 0.95, 48))
            sa, la = _contour_integral(gamma_int, ug, 1.0, rg, self.nodes)
            sb, lb = _contour_integral(sigma_int, us, 0.0, rs, self.nodes)
            logpref = (0.5 * alpha * (math.log(xv) - math.log(yv)) + 0.5 * M * (xv - yv)
                       + 2 * math.log(M))
            terms = _exp_signed(sa * sb, la + lb + logw + logpref)
            out[k] = -terms.sum()
        return out.reshape(bx.shape)

    # -- quadrature -----------------------------------------------------------

    def _rate(self) -> float:
        return self.M * min(1.0, *self.c) if self.c else float(self.M)

    def tail_grid(self, T: float, refine: int = 1) -> QuadratureGrid:
        """Composite Gauss-Legendre grid on [T, U] with U past the decay of all f_i g_j."""
        if T <= 0:
            raise ValueError(f"T must be positive, got {T}")
        U = _tail_cutoff(T, self.alpha, self._rate(), 2 * self.N)
        panels = refine * max(4, math.ceil((U - T) * (self.N + 1) / 4.0))
        nodes, weights = composite_gauss_legendre(T, U, panels)
        return QuadratureGrid(T=float(T), nodes=nodes, weights=weights, order=len(nodes), L=U - T)

    def gram(self, T: float, refine: int = 1) -> np.ndarray:
        """Matrix int_T^inf f_i g_j dx (rows i, columns j), in balanced scaling."""
        grid = self.tail_grid(T, refine)
        F, G = self.weighted_table(grid.nodes)
        return (F * grid.weights) @ G.T

    def gap_probability(self, T: float, method: str = "finite_rank", refine: int = 1) -> float:
        """P(max eigenvalue <= T)."""
        if T <= 0:
            raise ValueError(f"T must be positive, got {T}")
        if method == "finite_rank":
            d = np.linalg.det(np.eye(self.N) - self.gram(T, refine))
        elif method == "nystrom":
            grid = self.tail_grid(T, refine)
            F, G = self.weighted_table(grid.nodes)
            sw = grid.sqrt_weights
            K = sw[:, None] * (F.T @ G) * sw[None, :]
            d = np.linalg.det(np.eye(grid.order) - K)
        else:
            raise ValueError(f"unknown method {method!r}")
        return float(min(1.0, max(0.0, d)))

    def biorthonormality_check(self, order: int | None = None) -> float:
        """max |<phi_i, psi_tilde_j> - delta_ij| by generalized Gauss-Laguerre quadrature."""
        n = order or max(self.M + self.N, 40)
        low = self._inner_products(n)
        high = self._inner_products(2 * n)
        if np.max(np.abs(high - low)) > 1e-6:
            raise ArithmeticError("inner-product quadrature is under-resolved; raise the order")
        return float(np.max(np.abs(high - np.eye(self.N))))

    def _inner_products(self, n: int) -> np.ndarray:
        from scipy.special import roots_genlaguerre

        rho = self._rate()
        u, w = roots_genlaguerre(n, self.alpha)
        x = u / rho
        logW = np.log(w) - (self.alpha + 1) * math.log(rho) - self.alpha * np.log(x) + rho * x
        out = np.empty((self.N, self.N))
        logs = [self._log_weighted(j, x) for j in range(self.N)]
        for i in range(self.N):
            sf, lf = logs[i][0], logs[i][1]
            for j in range(self.N):
                sg, lg = logs[j][2], logs[j][3]
                out[i, j] = np.sum(_exp_signed(sf * sg, lf + lg + logW))
        return out


def phi(sys: ComplexSpikedSystem, j: int, x) -> np.ndarray:
    return sys.phi(j, x)


def psi_tilde(sys: ComplexSpikedSystem, j: int, x) -> np.ndarray:
    return sys.psi_tilde(j, x)


def biorthonormality_check(sys: ComplexSpikedSystem) -> float:
    return sys.biorthonormality_check()


def kernel_k2(sys: ComplexSpikedSystem, x, y) -> np.ndarray:
    return sys.kernel_k2(x, y)


def gap_probability_complex(sys: ComplexSpikedSystem, T: float) -> float:
    return sys.gap_probability(T)


# ---------------------------------------------------------------------------
# quaternion skew-orthogonal system
# ---------------------------------------------------------------------------

class QuaternionSkewSystem:
    """Skew-orthogonal basis for the rank <= 1 quaternion spiked Wishart ensemble.

    Every psi_i = phi_i x^(M-N+1/2) e^(-Mx) is held as s_i * psi_hat_i with a
    positive constant s_i and

        psi_hat_i(x) = sqrt(x) sum_k coef[i, k] l_k(2Mx)  (+ an exponential term for i = 2N-1),

    where l_k are orthonormal Laguerre functions with parameter 2(M-N).  The
    kernels only need kappa_j = s_{2j} s_{2j+1} / r_j, which is
    2M / sqrt((2j+1)(2j+2(M-N)+1)) up to the sign of a.
    """

    TAIL_LIMIT = 5000

    def __init__(self, params: ModelParams, a: float | None = None):
        if params.beta != 4:
            raise ValueError("the skew-orthogonal system needs beta = 4")
        if a is not None and a <= -1:
            raise ValueError("spike value must exceed -1")
        self.params = params
        self.N, self.M = params.N, params.M
        self.alpha = 2 * (self.M - self.N)
        self.a = None if a is None or a == 0 else float(a)
        self.spiked = self.a is not None
        N, M, al = self.N, self.M, self.alpha
        self.b = 2 * M * self.a / (1 + self.a) if self.spiked else 0.0

        k = np.arange(2 * N + 2)
        self.log_n = 0.5 * (gammaln(k + 1) - gammaln(k + al + 1))
        ratios = np.log((2 * np.arange(1, N) - 1) / (2 * np.arange(1, N) + al))
        self.log_c = np.concatenate([[0.0], np.cumsum(ratios)])
        self.kappa = 2 * M / np.sqrt((2 * np.arange(N) + 1) * (2 * np.arange(N) + al + 1))
        if self.spiked and self.a < 0:
            self.kappa[-1] = -self.kappa[-1]

        self.tail_form = False
        self.e_log = None
        K = 2 * N - 1
        rows: dict[int, np.ndarray] = {}
        for j in range(N):
            v = np.zeros(2 * j + 1)
            kk = np.arange(j + 1)
            v[2 * kk] = np.exp(self.log_c[kk] - self.log_c[j] + self.log_n[2 * j] - self.log_n[2 * kk])
            rows[2 * j] = v
        for j in range(N - 1 if self.spiked else N):
            v = np.zeros(2 * j + 2)
            v[-1] = -1.0
            rows[2 * j + 1] = v
        if self.spiked:
            rows[2 * N - 1] = self._last_row()
            K = max(K, len(rows[2 * N - 1]) - 1)
        self.coef = np.zeros((2 * N, K + 1))
        for i, v in rows.items():
            self.coef[i, :len(v)] = v
        kmax = K + 1
        D = np.zeros((2 * N, kmax + 1))
        kk = np.arange(K + 1)
        up = 0.5 * np.sqrt((kk + 1) * (kk + 1 + al))
        down = 0.5 * np.sqrt(kk * (kk + al))
        D[:, 1:K + 2] += self.coef * up
        D[:, 0:K] -= self.coef[:, 1:] * down[1:]
        self.dcoef = D

    def _last_row(self) -> np.ndarray:
        """Coefficients of psi_hat_{2N-1}; sets the exponential term when needed."""
        N, al, a = self.N, self.alpha, self.a
        m0 = 2 * N - 1
        sgn = math.copysign(1.0, a)
        ratio0 = abs(a) * math.sqrt((m0 + 1 + al) / (m0 + 1))
        if abs(a) < 1 and ratio0 <= 1:
            # tail of the generating-function series, all terms decay
            logs = [0.0]
            k = 0
            while True:
                k += 1
                m = m0 + k
                logs.append(logs[-1] + math.log(abs(a)) + 0.5 * math.log((m + al) / m))
                if logs[-1] < -40 and k > 10:
                    break
                if k > self.TAIL_LIMIT:
                    break
            if k <= self.TAIL_LIMIT:
                self.tail_form = True
                mags = np.exp(np.array(logs))
                signs = (-np.sign(a)) ** np.arange(len(logs))
                v = np.zeros(m0 + len(logs))
                v[m0:] = -sgn * signs * mags
                return v
        # exponential minus the partial Laguerre sum
        j = np.arange(m0)
        v = np.zeros(m0 + 1)
        logmag = (j - m0) * math.log(abs(a)) + self.log_n[m0] - self.log_n[j]
        # (-a)^j / |a|^(2N-1) = sign(-a)^j |a|^(j-2N+1)
        v[:m0] = -(np.sign(-a) ** j) * np.exp(logmag)
        self.e_log = self.log_n[m0] - (al + 1) * math.log1p(a) - m0 * math.log(abs(a))
        return v

    # -- tables ---------------------------------------------------------------

    def tables(self, x) -> tuple[np.ndarray, np.ndarray]:
        """psi_hat_i(x) and psi_hat_i'(x), each of shape (2N, len(x))."""
        x = np.asarray(x, dtype=float).ravel()
        if np.any(x <= 0):
            raise ValueError("skew-orthogonal functions need x > 0")
        y = 2 * self.M * x
        L = laguerre_functions(self.dcoef.shape[1] - 1, self.alpha, y)
        sx = np.sqrt(x)
        Psi = sx * (self.coef @ L[:self.coef.shape[1]])
        dPsi = (self.dcoef @ L) / sx
        if self.e_log is not None:
            logE = self.e_log + (self.b - self.M) * x + 0.5 * self.alpha * np.log(y)
            with np.errstate(over="ignore"):
                E = np.exp(logE)
            Psi[-1] += sx * E
            dPsi[-1] += E / sx * (0.5 * (self.alpha + 1) + (self.b - self.M) * x)
        return Psi, dPsi

    def scale_log(self, i: int) -> float:
        """log s_i with psi_i = s_i psi_hat_i."""
        N, M, al = self.N, self.M, self.alpha
        base = -0.5 * al * math.log(2 * M)
        if i % 2 == 0:
            return base + self.log_c[i // 2] - self.log_n[i]
        if i == 2 * N - 1 and self.spiked:
            return base + (al + 1) * math.log1p(self.a) + i * math.log(abs(self.a)) - self.log_n[i]
        return base - self.log_n[i]

    def psi(self, i: int, x) -> np.ndarray:
        """psi_i(x) in the raw normalization."""
        Psi, _ = self.tables(x)
        return math.exp(self.scale_log(i)) * Psi[i].reshape(np.shape(x))

    def psi_prime(self, i: int, x) -> np.ndarray:
        _, dPsi = self.tables(x)
        return math.exp(self.scale_log(i)) * dPsi[i].reshape(np.shape(x))

    def r(self, j: int) -> float:
        """The skew norm r_j = <phi_2j, phi_2j+1>_4."""
        N, M, al = self.N, self.M, self.alpha
        if not 0 <= j < N:
            raise IndexError(j)
        if j == N - 1 and self.spiked:
            a = self.a
            lg = ((al + 1) * (math.log1p(a) - math.log(2 * M)) + (2 * N - 1) * math.log(abs(a))
                  + gammaln(2 * M) - gammaln(2 * N - 1) + self.log_c[N - 1])
            return math.copysign(math.exp(lg), a)
        lg = -(al + 1) * math.log(2 * M) + gammaln(2 * j + al + 2) - gammaln(2 * j + 1) + self.log_c[j]
        return math.exp(lg)

    def phi_raw(self, i: int, x) -> tuple[np.ndarray, np.ndarray]:
        """phi_i and phi_i' from Laguerre polynomials directly (small N only)."""
        N, M, al = self.N, self.M, self.alpha
        x = np.asarray(x, dtype=float)
        y = 2 * M * x

        def L(n):
            return laguerre(n, al, y)

        def dL(n):
            return -2 * M * laguerre(n - 1, al + 1, y) if n > 0 else np.zeros_like(y)

        if i == 2 * N - 1 and self.spiked:
            a, b = self.a, self.b
            f = np.exp(b * x)
            fp = b * np.exp(b * x)
            pre = (1 + a) ** (al + 1)
            for j in range(2 * N - 1):
                f = f - pre * (-a) ** j * L(j)
                fp = fp - pre * (-a) ** j * dL(j)
            return f, fp
        if i % 2 == 1:
            return -L(i), -dL(i)
        j = i // 2
        f = np.zeros_like(y)
        fp = np.zeros_like(y)
        for k in range(j + 1):
            ck = math.exp(self.log_c[k])
            f = f + ck * L(2 * k)
            fp = fp + ck * dL(2 * k)
        return f, fp

    # -- kernels ------------------------------------------------------------------

    def pairing(self) -> np.ndarray:
        """Antisymmetric A with A[2j, 2j+1] = -kappa_j, the inverse of the normalized Z."""
        A = np.zeros((2 * self.N, 2 * self.N))
        for j in range(self.N):
            A[2 * j, 2 * j + 1] = -self.kappa[j]
            A[2 * j + 1, 2 * j] = self.kappa[j]
        return A

    def kernel_s4(self, x, y) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Blocks S4(x,y), SD4(x,y), IS4(x,y) and S4(y,x)."""
        bx, by = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        ux, ix = np.unique(bx, return_inverse=True)
        uy, iy = np.unique(by, return_inverse=True)
        P, dP = self.tables(np.concatenate([ux, uy]))
        Px, dPx = P[:, :len(ux)][:, ix.ravel()], dP[:, :len(ux)][:, ix.ravel()]
        Py, dPy = P[:, len(ux):][:, iy.ravel()], dP[:, len(ux):][:, iy.ravel()]
        A = self.pairing()
        shape = bx.shape

        def form(u, v):
            return np.einsum("ik,ij,jk->k", u, A, v).reshape(shape)

        return form(dPx, Py), -form(dPx, dPy), form(Px, Py), -form(Px, dPy)

    def _block_matrices(self, nodes: np.ndarray) -> tuple[np.ndarray, ...]:
        """The four kernel blocks on nodes x nodes from one table evaluation."""
        P, dP = self.tables(nodes)
        A = self.pairing()
        AP, AdP = A @ P, A @ dP
        return dP.T @ AP, -(dP.T @ AdP), P.T @ AP, -(P.T @ AdP)

    def _tail_integral(self, y: np.ndarray) -> np.ndarray:
        """int_y^inf t^(-1/2) l_{2N-1}(2Mt) dt."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        k = 2 * self.N - 1
        out = np.empty_like(y)
        for n, yv in enumerate(y):
            U = _tail_cutoff(yv, 0.5 * self.alpha, self.M, k)
            panels = max(4, math.ceil((U - yv) * (self.N + 1) / 2.0))
            t, w = composite_gauss_legendre(yv, U, panels)
            out[n] = np.sum(w * laguerre_functions(k, self.alpha, 2 * self.M * t)[k] / np.sqrt(t))
        return out

    def kernel_s4_split(self, x, y) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """S4 = S4a1 + S4a2 + S4b in closed Laguerre form (spiked systems)."""
        if not self.spiked:
            raise ValueError("the split form needs a nonzero spike")
        N, M, al = self.N, self.M, self.alpha
        bx, by = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        xs, ys = bx.ravel(), by.ravel()
        Lx = laguerre_functions(2 * N - 1, al, 2 * M * xs)
        Ly = laguerre_functions(2 * N - 1, al, 2 * M * ys)
        J = self._tail_integral(ys)
        a1 = M * np.sqrt(ys / xs) * np.sum(Lx[:2 * N - 1] * Ly[:2 * N - 1], axis=0)
        logC2 = (math.log(M / 2) + gammaln(2 * N) - gammaln(2 * M - 1)
                 - self.log_n[2 * N - 2] - self.log_n[2 * N - 1])
        a2 = math.exp(logC2) * Lx[2 * N - 2] / np.sqrt(xs) * J
        Px, dPx = self.tables(xs)
        Py, _ = self.tables(ys)
        sgn = math.copysign(1.0, self.a)
        b = -M * sgn * (Lx[2 * N - 1] / np.sqrt(xs) * Py[-1] + dPx[-1] * J)
        return a1.reshape(bx.shape), a2.reshape(bx.shape), b.reshape(bx.shape)

    # -- skew products and gap probability -----------------------------------

    def _rate(self) -> float:
        return 2 * self.M * min(1.0, 1.0 / (1 + self.a)) if self.spiked else 2.0 * self.M

    def tail_grid(self, T: float, refine: int = 1, upper: float | None = None) -> QuadratureGrid:
        if T <= 0:
            raise ValueError(f"T must be positive, got {T}")
        U = upper or _tail_cutoff(T, self.alpha + 1, self._rate(), 4 * self.N)
        panels = refine * max(4, math.ceil((U - T) * (2 * self.N + 1) / 4.0))
        nodes, weights = composite_gauss_legendre(T, U, panels)
        return QuadratureGrid(T=float(T), nodes=nodes, weights=weights, order=len(nodes), L=U - T)

    def skew_gram(self, T: float, refine: int = 1) -> np.ndarray:
        """G[a, b] = int_T^inf (psi_hat_a psi_hat_b' - psi_hat_a' psi_hat_b) dx."""
        grid = self.tail_grid(T, refine)
        P, dP = self.tables(grid.nodes)
        W = grid.weights
        G = (P * W) @ dP.T
        return G - G.T

    def skew_orthogonality_check(self, refine: int = 1) -> float:
        """Largest deviation of the raw skew products from r_j, scaled by sqrt(|r_i r_k|).

        Uses phi_i and phi_i' evaluated straight from Laguerre polynomials.
        """
        N, M, al = self.N, self.M, self.alpha
        U = _tail_cutoff(1e-3, al + 1, self._rate(), 4 * N)
        nodes, w = composite_gauss_legendre(0.0, U, refine * max(8, 4 * N))
        vals = [self.phi_raw(i, nodes) for i in range(2 * N)]
        weight = w * nodes ** (al + 1) * np.exp(-2 * M * nodes)
        F = np.array([v[0] for v in vals])
        dF = np.array([v[1] for v in vals])
        G = (F * weight) @ dF.T
        G = G - G.T
        Z = np.zeros_like(G)
        r = np.array([self.r(j) for j in range(N)])
        for j in range(N):
            Z[2 * j, 2 * j + 1] = r[j]
            Z[2 * j + 1, 2 * j] = -r[j]
        scale = np.sqrt(np.abs(np.repeat(r, 2)))
        return float(np.max(np.abs(G - Z) / np.outer(scale, scale)))

    def gap_probability(self, T: float, method: str = "auto", refine: int = 1) -> float:
        """P(max eigenvalue <= T) as the square root of a block Fredholm determinant.

        ``method='nystrom'`` discretizes the 2x2 matrix kernel; 'finite_rank'
        takes the equivalent 2N x 2N determinant det(I - A G).  For a > 1 the
        last basis function grows like e^((b-M)x) and the Nystrom matrix is too
        badly scaled for LU, so 'auto' switches to the finite-rank form there.
        """
        if T <= 0:
            raise ValueError(f"T must be positive, got {T}")
        if method == "auto":
            method = "nystrom" if self.b <= self.M else "finite_rank"
        if method == "finite_rank":
            d = np.linalg.det(np.eye(2 * self.N) - self.pairing() @ self.skew_gram(T, refine))
        elif method == "nystrom":
            grid = self.tail_grid(T, refine)
            blocks = self._block_matrices(grid.nodes)

            def block(k):
                def K(x, y):
                    if x.shape[0] != grid.order or y.shape[1] != grid.order:
                        raise ValueError("block tables were built for the grid nodes only")
                    return blocks[k]
                return K

            d = det_matrix2([[block(0), block(1)], [block(2), block(3)]], grid)
        else:
            raise ValueError(f"unknown method {method!r}")
        if d < -1e-8:
            raise ArithmeticError(f"block determinant is negative ({d:.3e})")
        return float(min(1.0, math.sqrt(max(d, 0.0))))


def skew_basis(params: ModelParams, a: float | None) -> QuaternionSkewSystem:
    return QuaternionSkewSystem(params, a)


def kernel_s4(sys: QuaternionSkewSystem, x, y):
    return sys.kernel_s4(x, y)


def gap_probability_quaternion(sys: QuaternionSkewSystem, T: float) -> float:
    return sys.gap_probability(T)


# ---------------------------------------------------------------------------
# small-N joint densities
# ---------------------------------------------------------------------------

def _equilibrated_det(mat: np.ndarray) -> np.ndarray:
    """Determinant after row and column scaling; plain LU fails when exponential rows dwarf the rest."""
    r = np.abs(mat).max(axis=-1, keepdims=True)
    r = np.where(r > 0, r, 1.0)
    scaled = mat / r
    c = np.abs(scaled).max(axis=-2, keepdims=True)
    c = np.where(c > 0, c, 1.0)
    scaled = scaled / c
    return np.linalg.det(scaled) * np.prod(r[..., 0], axis=-1) * np.prod(c[..., 0, :], axis=-1)


def joint_pdf_rank1(beta: int, lam: np.ndarray, M: int, a: float) -> np.ndarray:
    """Unnormalized rank-one joint eigenvalue density; ``lam`` has shape (..., N)."""
    lam = np.asarray(lam, dtype=float)
    N = lam.shape[-1]
    if beta == 2:
        c = M * a / (1 + a)
        alpha = M - N
        powers = lam[..., None, :] ** np.arange(N - 1)[:, None]
        rows = np.concatenate([powers, np.exp(c * lam)[..., None, :]], axis=-2)
        diff = lam[..., None, :] - lam[..., :, None]
        vdm = np.prod(np.where(np.triu(np.ones((N, N), bool), 1), diff, 1.0), axis=(-1, -2))
        weight = np.prod(lam ** alpha * np.exp(-M * lam), axis=-1)
        return vdm * _equilibrated_det(rows) * weight
    if beta == 4:
        b = 2 * M * a / (1 + a)
        alpha = 2 * (M - N)
        shape = lam.shape[:-1] + (2 * N, 2 * N)
        mat = np.zeros(shape)
        for i in range(2 * N - 1):
            mat[..., i, 0::2] = lam ** i
            mat[..., i, 1::2] = i * lam ** max(i - 1, 0) if i > 0 else 0.0
        mat[..., -1, 0::2] = np.exp(b * lam)
        mat[..., -1, 1::2] = b * np.exp(b * lam)
        weight = np.prod(lam ** (alpha + 1) * np.exp(-2 * M * lam), axis=-1)
        return _equilibrated_det(mat) * weight
    raise ValueError("joint densities are available for beta = 2 and 4")


def max_cdf_two_by_quadrature(beta: int, M: int, a: float, T: float | Sequence[float],
                              order: int = 80) -> np.ndarray:
    """P(max eigenvalue <= T) at N = 2 by tensor Gauss-Legendre quadrature of the joint pdf."""
    m_eff = M if beta == 2 else 2 * M
    rate = m_eff / (1 + max(a, 0.0))
    U = _tail_cutoff(1e-3, 2 * M, rate, 8)
    xn, xw = composite_gauss_legendre(0.0, U, 16, order=order // 2)

    def mass(nodes, weights):
        l1, l2 = np.meshgrid(nodes, nodes, indexing="ij")
        p = joint_pdf_rank1(beta, np.stack([l1, l2], axis=-1), M, a)
        return np.sum(p * weights[:, None] * weights[None, :])

    total = mass(xn, xw)
    Ts = np.atleast_1d(np.asarray(T, dtype=float))
    out = np.empty_like(Ts)
    for k, t in enumerate(Ts):
        n, w = composite_gauss_legendre(0.0, t, 8, order=order // 2)
        out[k] = mass(n, w) / total
    return out if np.ndim(T) else out[0]


# ---------------------------------------------------------------------------
# convergence probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProbeRow:
    M: int
    N: int
    sup_distance: float


def convergence_probe(regime: str, M_list: Sequence[int], beta: int = 2, gamma_sq: float = 4.0,
                      a: float | None = None, xi: Sequence[float] | None = None) -> list[ProbeRow]:
    """Sup over a xi-grid of |finite-N gap probability - limit law| for each M.

    ``regime`` is 'white', 'subcritical', 'critical' or 'supercritical';
    spiked regimes are rank one.  The critical spike defaults to 1/gamma.
    """
    if list(M_list) != sorted(set(M_list)):
        raise ValueError("M list must be strictly increasing")
    if beta not in (2, 4):
        raise ValueError("finite-N systems exist for beta = 2 and 4")
    if regime not in ("white", "subcritical", "critical", "supercritical"):
        raise ValueError(f"unknown regime {regime!r}")
    if regime == "white":
        a = None
    elif regime == "critical" and a is None:
        a = 1.0 / math.sqrt(gamma_sq)
    elif a is None:
        raise ValueError(f"regime {regime!r} needs a spike value")
    rows = []
    for M in M_list:
        params = ModelParams.from_ratio(beta, M, gamma_sq)
        if regime == "critical":
            spike = 1.0 / params.gamma
        else:
            spike = a
        sc = classify_regime(spike, params)
        if regime != "white" and sc.tag.value != regime and sc.tag is not Regime(regime):
            raise ValueError(f"a = {spike} is not {regime} at M = {M}")
        if beta == 2:
            spec = SpikeSpec() if spike is None else SpikeSpec((spike,), (1,))
            sysobj = ComplexSpikedSystem(params, spec)
        else:
            sysobj = QuaternionSkewSystem(params, spike)
        if sc.tag is Regime.SUPERCRITICAL:
            law = dist.gaussian_cdf
            grid = np.arange(-3.0, 3.01, 0.25) if xi is None else np.asarray(xi)
        else:
            if sc.tag is Regime.CRITICAL:
                law = (lambda s: dist.f_gue_t(s, 1)) if beta == 2 else dist.f_gse1
            else:
                law = dist.f_gue if beta == 2 else dist.f_gse
            grid = np.arange(-4.0, 2.01, 0.25) if xi is None else np.asarray(xi)
        worst = 0.0
        for s in grid:
            T = sc.center + s / sc.scale
            p = sysobj.gap_probability(T, method="finite_rank") if T > 0 else 0.0
            worst = max(worst, abs(p - float(law(s))))
        rows.append(ProbeRow(M, params.N, worst))
    return rows
