"""Identity suite shared by the ``verify`` command and the test-suite.

Each check returns a deviation; it passes when the deviation does not exceed
its tolerance.  Exact checks report the number of failing cases and use
tolerance 0.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np
from scipy import integrate, special

from . import distributions as dist
from . import ensembles as ens
from . import finite_kernels as fk
from . import fredholm, specfun, symfun

MODULES = ("specfun", "fredholm", "distributions", "symfun", "ensembles", "finite_kernels")

ACCEPTANCE_GRID = np.arange(-5.0, 2.0 + 1e-9, 0.5)


@dataclass(frozen=True)
class Check:
    name: str
    module: str
    tolerance: float
    run: Callable[[], float]
    description: str = ""


@dataclass(frozen=True)
class CheckResult:
    name: str
    module: str
    deviation: float
    tolerance: float
    passed: bool
    seconds: float
    error: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _rng():
    return np.random.default_rng(20240531)


def _rationals(rng, n, lo=-4, hi=4, den=7):
    return [Fraction(int(rng.integers(lo * den, hi * den + 1)), den) for _ in range(n)]


# ---------------------------------------------------------------------------
# specfun
# ---------------------------------------------------------------------------

def _airy_tail_quadrature() -> float:
    xs = [-6.0, -2.0, 0.0, 1.0, 3.0, 7.0]
    dev = 0.0
    for x in xs:
        ref = integrate.quad(lambda t: special.airy(t)[0], x, np.inf, epsabs=1e-15, epsrel=1e-13,
                             limit=400)[0]
        dev = max(dev, abs(specfun.airy_tail(x) - ref))
    return dev


def _contour_airy() -> float:
    x = np.linspace(-4, 4, 9)
    d1 = np.abs(specfun.contour_fun(1, x, "t") - specfun.airy_ai(x)).max()
    d2 = np.abs(specfun.contour_fun(1, x, "s") - (1 - specfun.airy_tail(x))).max()
    d3 = np.abs(specfun.contour_fun(2, x, "t") + specfun.airy_ai_prime(x)).max()
    return float(max(d1, d2, d3))


def _painleve_tail() -> float:
    sol = specfun.default_painleve()
    x = 6.0
    return abs(float(sol(x, "q")) / float(specfun.airy_ai(x)) - 1.0)


def _laguerre_orthonormality() -> float:
    alpha = 3.5
    u, w = special.roots_genlaguerre(40, alpha)
    L = specfun.laguerre_functions(10, alpha, u)
    weight = w * np.exp(u) * u ** (-alpha)
    gram = (L * weight) @ L.T
    return float(np.abs(gram - np.eye(11)).max())


# ---------------------------------------------------------------------------
# fredholm
# ---------------------------------------------------------------------------

def _rank_one_det() -> float:
    grid = fredholm.make_grid(0.0, 60, 16.0)
    d = fredholm.det_scalar(lambda x, y: np.exp(-x - y), grid)
    return abs(d - (1 - 0.5 * (1 - math.exp(-32.0))))


def _conjugation() -> float:
    grid = fredholm.make_grid(-2.0, 60, 16.0)
    d0 = fredholm.det_scalar(dist.airy_kernel, grid)
    d1 = fredholm.det_scalar(fredholm.conjugate_kernel(dist.airy_kernel, lambda x: np.exp(x / 3)), grid)
    return abs(d0 - d1)


# ---------------------------------------------------------------------------
# distributions
# ---------------------------------------------------------------------------

def _max_diff(f, g, grid=ACCEPTANCE_GRID) -> float:
    return float(max(abs(f(T) - g(T)) for T in grid))


def _gue_backends() -> float:
    return _max_diff(lambda T: dist.f_gue(T, dist.FREDHOLM), lambda T: dist.f_gue(T, dist.PAINLEVE))


def _gse_backends() -> float:
    return _max_diff(lambda T: dist.f_gse(T, dist.FREDHOLM), lambda T: dist.f_gse(T, dist.PAINLEVE))


def _gue1_goe2() -> float:
    return _max_diff(lambda T: dist.f_gue_t(T, 1), lambda T: dist.f_goe(T) ** 2)


def _gse1_goe() -> float:
    return _max_diff(dist.f_gse1, dist.f_goe)


def _g1_normal() -> float:
    return _max_diff(lambda T: dist.g_t(T, 1), dist.gaussian_cdf, np.arange(-5.0, 5.01, 0.5))


def _resolvent() -> float:
    dev = 0.0
    for T in (-3.0, -1.0, 0.0, 1.5):
        r = dist.resolvent_checks(T)
        dev = max(dev, abs(r["u_T"] - r["expected_u_T"]), abs(r["inner"] - r["expected_inner"]))
    return dev


# ---------------------------------------------------------------------------
# symfun (exact)
# ---------------------------------------------------------------------------

def _hooks() -> float:
    bad = 0
    for k in range(1, 7):
        bad += symfun.hook_product((k,)) != math.factorial(k)
    bad += symfun.hook_product((1, 1)) != 2
    bad += symfun.hook_product((2, 1)) != 3
    bad += symfun.hook_product((4, 3, 3, 2, 1)) != 414720
    # sum of (k!/H)^2 over partitions of k is k!
    for k in range(1, 7):
        total = sum((math.factorial(k) // symfun.hook_product(p)) ** 2 for p in symfun.partitions(k))
        bad += total != math.factorial(k)
    return float(bad)


def _schur_specializations() -> float:
    bad = 0
    for a in (Fraction(1, 3), Fraction(5, 2), Fraction(-1, 4)):
        v = a / (1 + a)
        for k in range(6):
            bad += symfun.schur((k,), [v]) != v**k
    for N in range(1, 5):
        for k in range(6):
            expect = Fraction(math.factorial(N + k - 1), math.factorial(N - 1) * math.factorial(k))
            bad += symfun.schur((k,), [Fraction(1)] * N) != expect
    x1, x2 = Fraction(2, 3), Fraction(-5, 7)
    bad += symfun.schur((1, 1), [x1, x2]) != x1 * x2
    for k in range(1, 6):
        for p in symfun.partitions(k):
            for n in range(1, 4):
                if p.length > n:
                    bad += symfun.schur(p, [Fraction(i + 2, 3) for i in range(n)]) != 0
    return float(bad)


def _zonal_power_sum() -> float:
    rng = _rng()
    bad = 0
    for k in range(1, 6):
        for n in (1, 2, 3, 4):
            x = _rationals(rng, n)
            total = sum(symfun.complex_zonal(p, x) for p in symfun.partitions(k))
            bad += total != sum(x) ** k
    return float(bad)


def _series_inverse_square(lam, order):
    """Coefficients of prod (1 - lam t)^(-2) up to t^order, by series multiplication."""
    coef = [Fraction(1)] + [Fraction(0)] * order
    for v in lam:
        factor = [(m + 1) * v**m for m in range(order + 1)]
        coef = [sum(coef[i] * factor[m - i] for i in range(m + 1)) for m in range(order + 1)]
    return coef


def _quaternion_rows() -> float:
    rng = _rng()
    bad = 0
    for a in (Fraction(1, 3), Fraction(7, 5)):
        v = a / (1 + a)
        for j in range(7):
            bad += symfun.quaternionic_zonal_row(j, [v]) != v**j
    for N in range(1, 5):
        for j in range(7):
            expect = Fraction(math.prod(2 * N + i for i in range(j)), math.factorial(j + 1))
            bad += symfun.quaternionic_zonal_row(j, [Fraction(1)] * N) != expect
    lam = _rationals(rng, 3)
    series = _series_inverse_square(lam, 8)
    for j in range(9):
        bad += (j + 1) * symfun.quaternionic_zonal_row(j, lam) != series[j]
    return float(bad)


def _confluent_lemma() -> float:
    rng = _rng()
    bad = int(symfun.ssj_confluent(1, [Fraction(1), Fraction(2)]) != 6)
    bad += symfun.ssj_confluent(0, [Fraction(1, 2), Fraction(3)]) != 1
    for _ in range(10):
        n = int(rng.integers(1, 4))
        lam = []
        while len(lam) < n:
            v = _rationals(rng, 1, 1, 5)[0]
            if v not in lam:
                lam.append(v)
        j = int(rng.integers(0, 5))
        bad += symfun.ssj_confluent(j, lam) != (j + 1) * symfun.quaternionic_zonal_row(j, lam)
    return float(bad)


def _jack_power_sum() -> float:
    rng = _rng()
    bad = 0
    for alpha in (Fraction(2), Fraction(1), Fraction(1, 2)):
        for k in range(1, 6):
            x = _rationals(rng, 3)
            total = sum(symfun.jack(alpha, p, x) for p in symfun.partitions(k))
            bad += total != sum(x) ** k
    for k in range(1, 6):
        x = _rationals(rng, 3)
        for p in symfun.partitions(k):
            bad += symfun.jack(Fraction(1), p, x) != symfun.complex_zonal(p, x)
        bad += symfun.jack(Fraction(1, 2), (k,), x) != symfun.quaternionic_zonal_row(k, x)
    return float(bad)


def _rank_one_series() -> float:
    rng = _rng()
    dev = 0.0
    for _ in range(5):
        lam = rng.uniform(0.2, 3.0, 2)
        c = 3 * 0.5 / 1.5
        s, d = symfun.rank_one_series(c, lam), symfun.rank_one_determinant(c, lam)
        dev = max(dev, abs(s - d) / abs(d))
    return dev


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------

def _mp_mass() -> float:
    return max(abs(ens.mp_cdf(ens.mp_support(g)[1] - 1e-14, g) - 1.0) for g in (1.0, 2.0, 3.0))


def _mp_histogram() -> float:
    return mp_histogram_distance(N=1000, gamma_sq=4.0, seed=7)


def mp_histogram_distance(N: int, gamma_sq: float, seed: int, bins: int = 40) -> float:
    """Sup distance between a one-draw eigenvalue histogram and the Marcenko-Pastur density."""
    params = ens.ModelParams(ens.DivisionAlgebra.COMPLEX, N, int(round(N * gamma_sq)))
    cov = ens.build_covariance(ens.SpikeSpec(), N)
    X = ens.sample_data_matrix(params, cov, seed)
    ev = ens.spectrum(ens.sample_covariance(X)).eigenvalues
    b1, b2 = ens.mp_support(params.gamma)
    counts, edges = np.histogram(ev, bins=bins, range=(b1, b2))
    width = edges[1] - edges[0]
    hist = counts / (len(ev) * width)
    # compare with the bin-averaged density so the edge singularity is not penalized
    avg = np.array([(ens.mp_cdf(hi, params.gamma) - ens.mp_cdf(lo, params.gamma)) / width
                    for lo, hi in zip(edges[:-1], edges[1:])])
    return float(np.abs(hist - avg).max())


def _kramers() -> float:
    params = ens.ModelParams(ens.DivisionAlgebra.QUATERNION, 6, 12)
    X = ens.sample_data_matrix(params, ens.build_covariance(ens.SpikeSpec((0.5,), (1,)), 6), 3)
    S = ens.sample_covariance(X)
    full = np.linalg.eigvalsh(S.matrix)
    pairs = full.reshape(-1, 2)
    return float(np.abs(pairs[:, 0] - pairs[:, 1]).max() / max(1.0, full.max()))


def _reproducible() -> float:
    params = ens.ModelParams(ens.DivisionAlgebra.COMPLEX, 5, 20)
    spec = ens.SpikeSpec((1.0,), (1,))
    a = ens.sample_max_eigenvalues(spec, params, 40, 11, threads=1)
    b = ens.sample_max_eigenvalues(spec, params, 40, 11, threads=2)
    return float(np.abs(a - b).max())


# ---------------------------------------------------------------------------
# finite_kernels
# ---------------------------------------------------------------------------

def _complex(N, M, spikes):
    return fk.ComplexSpikedSystem(ens.ModelParams(ens.DivisionAlgebra.COMPLEX, N, M),
                                  ens.SpikeSpec.parse(spikes))


def _quaternion(N, M, a):
    return fk.QuaternionSkewSystem(ens.ModelParams(ens.DivisionAlgebra.QUATERNION, N, M), a)


def _bio_rank1() -> float:
    return _complex(4, 6, "0.5").biorthonormality_check()


def _bio_rank2() -> float:
    return _complex(6, 8, "0.3,0.9").biorthonormality_check()


def _skew() -> float:
    return _quaternion(3, 5, 0.4).skew_orthogonality_check()


def _complex_gap_quadrature() -> float:
    s = _complex(2, 3, "0.5")
    Ts = [0.5, 1.0, 2.0, 3.0]
    ref = fk.max_cdf_two_by_quadrature(2, 3, 0.5, Ts)
    return float(max(abs(s.gap_probability(T) - r) for T, r in zip(Ts, ref)))


def _complex_gap_nystrom() -> float:
    s = _complex(3, 5, "0.4,1.2")
    return float(max(abs(s.gap_probability(T) - s.gap_probability(T, "nystrom"))
                     for T in (0.8, 1.5, 2.5)))


def _quaternion_gap_quadrature() -> float:
    q = _quaternion(2, 4, 0.3)
    Ts = [0.8, 1.2, 1.6, 2.4]
    ref = fk.max_cdf_two_by_quadrature(4, 4, 0.3, Ts)
    return float(max(abs(q.gap_probability(T) - r) for T, r in zip(Ts, ref)))


def _k2a_forms() -> float:
    s = _complex(4, 6, "0.5")
    rng = _rng()
    x, y = rng.uniform(0.2, 3.0, 10), rng.uniform(0.2, 3.0, 10)
    return float(np.abs(s.kernel_k2a(x, y) - s.kernel_k2a_integral(x, y)).max())


def _k2_conjugation() -> float:
    s = _complex(4, 6, "0.5")
    g = s.params.gamma
    M, alpha = s.M, s.alpha
    grid = s.tail_grid(1.2)

    def f(x):
        return x ** (alpha / 2) * np.exp((1 - g) * M * x / (2 * (g + 1)))

    d0 = fredholm.det_scalar(s.kernel_k2, grid)
    d1 = fredholm.det_scalar(fredholm.conjugate_kernel(s.kernel_k2, f), grid)
    return abs(d0 - d1)


def _s4_split() -> float:
    q = _quaternion(3, 5, 0.4)
    rng = _rng()
    x, y = rng.uniform(0.3, 2.5, 10), rng.uniform(0.3, 2.5, 10)
    S = q.kernel_s4(x, y)[0]
    return float(np.abs(sum(q.kernel_s4_split(x, y)) - S).max())


def _sd4_derivative() -> float:
    q = _quaternion(3, 5, 0.4)
    rng = _rng()
    x, y = rng.uniform(0.3, 2.5, 10), rng.uniform(0.3, 2.5, 10)
    h = 1e-5
    dS = (q.kernel_s4(x, y + h)[0] - q.kernel_s4(x, y - h)[0]) / (2 * h)
    return float(np.abs(q.kernel_s4(x, y)[1] + dS).max())


def _probe() -> float:
    rows = fk.convergence_probe("white", [40, 80, 160])
    d = [r.sup_distance for r in rows]
    return float(max(b / a for a, b in zip(d, d[1:])))


# ---------------------------------------------------------------------------

CHECKS: tuple[Check, ...] = (
    Check("airy_tail_quadrature", "specfun", 1e-12, _airy_tail_quadrature),
    Check("contour_functions_airy", "specfun", 1e-12, _contour_airy),
    Check("painleve_airy_tail", "specfun", 1e-8, _painleve_tail),
    Check("laguerre_orthonormality", "specfun", 1e-12, _laguerre_orthonormality),
    Check("rank_one_determinant", "fredholm", 1e-13, _rank_one_det),
    Check("conjugation_invariance", "fredholm", 1e-12, _conjugation),
    Check("gue_backends", "distributions", 1e-6, _gue_backends),
    Check("gse_backends", "distributions", 1e-5, _gse_backends),
    Check("gue1_equals_goe_squared", "distributions", 1e-5, _gue1_goe2),
    Check("gse1_equals_goe", "distributions", 1e-5, _gse1_goe),
    Check("g1_is_gaussian", "distributions", 1e-9, _g1_normal),
    Check("resolvent_identities", "distributions", 1e-8, _resolvent),
    Check("hook_products", "symfun", 0.0, _hooks),
    Check("schur_specializations", "symfun", 0.0, _schur_specializations),
    Check("zonal_power_sum", "symfun", 0.0, _zonal_power_sum),
    Check("quaternion_zonal_rows", "symfun", 0.0, _quaternion_rows),
    Check("confluent_vandermonde", "symfun", 0.0, _confluent_lemma),
    Check("jack_power_sum", "symfun", 0.0, _jack_power_sum),
    Check("rank_one_series", "symfun", 1e-10, _rank_one_series),
    Check("mp_total_mass", "ensembles", 1e-8, _mp_mass),
    Check("mp_histogram", "ensembles", 0.05, _mp_histogram),
    Check("kramers_pairs", "ensembles", 1e-8, _kramers),
    Check("thread_independence", "ensembles", 0.0, _reproducible),
    Check("biorthonormality_rank1", "finite_kernels", 1e-8, _bio_rank1),
    Check("biorthonormality_rank2", "finite_kernels", 1e-7, _bio_rank2),
    Check("skew_orthogonality", "finite_kernels", 1e-7, _skew),
    Check("complex_gap_vs_joint_pdf", "finite_kernels", 1e-4, _complex_gap_quadrature),
    Check("complex_gap_nystrom", "finite_kernels", 1e-6, _complex_gap_nystrom),
    Check("quaternion_gap_vs_joint_pdf", "finite_kernels", 1e-3, _quaternion_gap_quadrature),
    Check("k2a_sum_vs_integral", "finite_kernels", 1e-7, _k2a_forms),
    Check("k2_conjugation", "finite_kernels", 1e-8, _k2_conjugation),
    Check("s4_split_forms", "finite_kernels", 1e-7, _s4_split),
    Check("sd4_derivative", "finite_kernels", 1e-6, _sd4_derivative),
    Check("white_probe_ratio", "finite_kernels", 0.999, _probe),
)


def select(only: Iterable[str] | None = None) -> list[Check]:
    """Checks whose module or name is in ``only`` (all when empty)."""
    wanted = set(only or ())
    known = set(MODULES) | {c.name for c in CHECKS}
    unknown = wanted - known
    if unknown:
        raise ValueError(f"unknown module or check: {', '.join(sorted(unknown))}")
    if not wanted:
        return list(CHECKS)
    return [c for c in CHECKS if c.module in wanted or c.name in wanted]


def run_check(check: Check, tolerance: float | None = None) -> CheckResult:
    tol = check.tolerance if tolerance is None else tolerance
    start = time.perf_counter()
    try:
        dev = float(check.run())
        err = None
        ok = bool(np.isfinite(dev) and dev <= tol)
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        dev, err, ok = float("nan"), f"{type(exc).__name__}: {exc}", False
    return CheckResult(check.name, check.module, dev, tol, ok, time.perf_counter() - start, err)


def run_suite(only: Iterable[str] | None = None,
              tolerances: dict[str, float] | None = None) -> list[CheckResult]:
    tolerances = tolerances or {}
    names = {c.name for c in CHECKS}
    bad = set(tolerances) - names
    if bad:
        raise ValueError(f"tolerance override for unknown check: {', '.join(sorted(bad))}")
    return [run_check(c, tolerances.get(c.name)) for c in select(only)]
