"""Spiked Wishart ensembles over the reals, complexes and quaternions.

Quaternion matrices are stored through the symplectic embedding
q = z1 + z2 j  ->  [[z1, z2], [-conj(z2), conj(z1)]], so an N x M quaternion
matrix is a 2N x 2M complex array and Hermitian solvers apply directly.
"""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate, linalg

__all__ = [
    "DivisionAlgebra",
    "SpikeSpec",
    "ModelParams",
    "DataMatrix",
    "SampleCovariance",
    "Spectrum",
    "Regime",
    "ScalingRegime",
    "KramersPairError",
    "build_covariance",
    "sample_data_matrix",
    "sample_covariance",
    "spectrum",
    "quaternion_real_embedding",
    "classify_regime",
    "rescale_max",
    "mp_support",
    "mp_density",
    "mp_cdf",
    "ECDF",
    "empirical_cdf",
    "ks_statistic",
    "sample_rng",
    "sample_max_eigenvalues",
    "spectrum_to_csv",
    "thread_count",
]

THREADS_ENV = "SPIKED_SPECTRA_THREADS"


class DivisionAlgebra(enum.Enum):
    REAL = 1
    COMPLEX = 2
    QUATERNION = 4

    @property
    def beta(self) -> int:
        return self.value

    @classmethod
    def from_beta(cls, beta: int) -> "DivisionAlgebra":
        try:
            return cls(int(beta))
        except ValueError:
            raise ValueError(f"beta must be 1, 2 or 4, got {beta}") from None


@dataclass(frozen=True)
class SpikeSpec:
    """Spike values a_1 < ... < a_s with multiplicities r_1, ..., r_s."""

    values: tuple = ()
    multiplicities: tuple = ()

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        mult = tuple(int(m) for m in self.multiplicities)
        if len(vals) != len(mult):
            raise ValueError("values and multiplicities must have equal length")
        if any(v <= -1 for v in vals):
            raise ValueError("spike values must exceed -1")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("spike values must be strictly increasing")
        if any(m < 1 for m in mult):
            raise ValueError("multiplicities must be positive")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "multiplicities", mult)

    @property
    def rank(self) -> int:
        return sum(self.multiplicities)

    @property
    def a_max(self) -> float | None:
        return self.values[-1] if self.values else None

    @property
    def top_multiplicity(self) -> int:
        return self.multiplicities[-1] if self.multiplicities else 0

    @classmethod
    def parse(cls, text: str) -> "SpikeSpec":
        """Parse 'a:mult,a:mult'; a bare value means multiplicity 1."""
        text = (text or "").strip()
        if not text:
            return cls()
        pairs = []
        for item in text.split(","):
            a, _, m = item.strip().partition(":")
            pairs.append((float(a), int(m) if m else 1))
        pairs.sort()
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    def __str__(self) -> str:
        return ",".join(f"{a:g}:{m}" for a, m in zip(self.values, self.multiplicities))


@dataclass(frozen=True)
class ModelParams:
    division: DivisionAlgebra
    N: int
    M: int

    def __post_init__(self):
        if not (1 <= self.N <= self.M):
            raise ValueError(f"need M >= N >= 1, got N={self.N}, M={self.M}")

    @property
    def beta(self) -> int:
        return self.division.beta

    @property
    def gamma_sq(self) -> float:
        return self.M / self.N

    @property
    def gamma(self) -> float:
        return math.sqrt(self.gamma_sq)

    @classmethod
    def from_ratio(cls, beta: int, M: int, gamma_sq: float) -> "ModelParams":
        """N = round(M / gamma^2); the realized ratio M/N is used downstream."""
        if gamma_sq < 1:
            raise ValueError("gamma^2 must be >= 1")
        return cls(DivisionAlgebra.from_beta(beta), max(1, round(M / gamma_sq)), int(M))


@dataclass(frozen=True)
class DataMatrix:
    values: np.ndarray
    params: ModelParams


@dataclass(frozen=True)
class SampleCovariance:
    matrix: np.ndarray
    params: ModelParams


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    params: ModelParams

    @property
    def max(self) -> float:
        return float(self.eigenvalues[-1])


class Regime(enum.Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class ScalingRegime:
    tag: Regime
    center: float
    scale: float
    multiplicity: int = 0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")


class KramersPairError(ArithmeticError):
    """Eigenvalues of a quaternion embedding failed to pair up."""

    def __init__(self, gap: float):
        super().__init__(f"Kramers pair mismatch: gap {gap:.3e}")
        self.gap = gap


# ---------------------------------------------------------------------------
# construction and sampling
# ---------------------------------------------------------------------------

def build_covariance(spec: SpikeSpec, N: int) -> np.ndarray:
    """Diagonal population covariance: spikes 1 + a_j first, then ones."""
    if spec.rank > N:
        raise ValueError(f"spike rank {spec.rank} exceeds dimension {N}")
    diag = [1.0 + a for a, m in zip(spec.values, spec.multiplicities) for _ in range(m)]
    diag += [1.0] * (N - spec.rank)
    return np.diag(diag)


def sample_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Independent stream for sample ``index`` of a run seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def _gaussian_block(params: ModelParams, sd: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    N, M = params.N, params.M
    if params.division is DivisionAlgebra.REAL:
        return sd[:, None] * rng.standard_normal((N, M))
    if params.division is DivisionAlgebra.COMPLEX:
        g = rng.standard_normal((2, N, M))
        return (sd / math.sqrt(2))[:, None] * (g[0] + 1j * g[1])
    g = rng.standard_normal((4, N, M)) * (sd / 2)[:, None]
    z1, z2 = g[0] + 1j * g[1], g[2] + 1j * g[3]
    X = np.empty((2 * N, 2 * M), dtype=complex)
    X[0::2, 0::2] = z1
    X[0::2, 1::2] = z2
    X[1::2, 0::2] = -z2.conj()
    X[1::2, 1::2] = z1.conj()
    return X


def sample_data_matrix(params: ModelParams, covariance: np.ndarray, seed: int,
                       index: int = 0) -> DataMatrix:
    """Columns are i.i.d. centered normals with the given diagonal covariance."""
    diag = np.diag(covariance) if np.ndim(covariance) == 2 else np.asarray(covariance)
    if np.any(diag <= 0):
        raise ValueError("covariance must be positive")
    if len(diag) != params.N:
        raise ValueError("covariance size does not match N")
    return DataMatrix(_gaussian_block(params, np.sqrt(diag), sample_rng(seed, index)), params)


def sample_covariance(X: DataMatrix) -> SampleCovariance:
    """S = X X^* / M."""
    S = X.values @ X.values.conj().T / X.params.M
    return SampleCovariance(S, X.params)


def _kramers_dedup(ev: np.ndarray) -> np.ndarray:
    a, b = ev[0::2], ev[1::2]
    gap = np.abs(a - b)
    tol = 1e-8 * np.maximum(1.0, np.abs(a))
    if np.any(gap > tol):
        raise KramersPairError(float(np.max(gap)))
    return 0.5 * (a + b)


def spectrum(S: SampleCovariance) -> Spectrum:
    """Sorted eigenvalues; quaternion spectra return each Kramers pair once."""
    ev = linalg.eigvalsh(S.matrix)
    if S.params.division is DivisionAlgebra.QUATERNION:
        ev = _kramers_dedup(ev)
    return Spectrum(np.sort(ev), S.params)


def quaternion_real_embedding(S: SampleCovariance) -> np.ndarray:
    """Real 4N x 4N symmetric form [[A, -B], [B, A]] of the 2N complex embedding."""
    A, B = S.matrix.real, S.matrix.imag
    return np.block([[A, -B], [B, A]])


# ---------------------------------------------------------------------------
# scaling
# ---------------------------------------------------------------------------

def classify_regime(a_max: float | None, params: ModelParams, multiplicity: int = 1) -> ScalingRegime:
    """Centering and scale for the largest eigenvalue; xi = (lambda_max - center) * scale.

    ``a_max=None`` is the white (unspiked) ensemble.  The boundary a = 1/gamma
    is classified as critical.
    """
    if a_max is not None and a_max <= -1:
        raise ValueError("spike value must exceed -1")
    beta = params.beta
    gamma = params.gamma
    M = params.M
    m_eff = 2 * M if beta == 4 else M
    threshold = 1.0 / gamma
    if a_max is None or a_max < threshold and not math.isclose(a_max, threshold, rel_tol=1e-12):
        tag = Regime.SUBCRITICAL
    elif math.isclose(a_max, threshold, rel_tol=1e-12):
        tag = Regime.CRITICAL
    else:
        tag = Regime.SUPERCRITICAL
    if beta == 1 and a_max is not None and tag is not Regime.SUBCRITICAL:
        raise ValueError("scaling for real spiked ensembles is only available below threshold")
    if tag is Regime.SUPERCRITICAL:
        a = a_max
        center = (1 + a) * (1 + 1 / (gamma**2 * a))
        scale = math.sqrt(m_eff) / ((1 + a) * math.sqrt(1 - 1 / (gamma**2 * a**2)))
    else:
        center = (1 + 1 / gamma) ** 2
        scale = gamma * m_eff ** (2.0 / 3.0) / (1 + gamma) ** (4.0 / 3.0)
    return ScalingRegime(tag, center, scale, multiplicity if a_max is not None else 0)


def rescale_max(spec: Spectrum | float | np.ndarray, regime: ScalingRegime):
    """(lambda_max - center) * scale; accepts a Spectrum or raw maxima."""
    if isinstance(spec, Spectrum):
        if len(spec.eigenvalues) == 0:
            raise ValueError("empty spectrum")
        lam = spec.max
    else:
        lam = np.asarray(spec, dtype=float)
    return (lam - regime.center) * regime.scale


# ---------------------------------------------------------------------------
# Marcenko-Pastur
# ---------------------------------------------------------------------------

def mp_support(gamma: float) -> tuple[float, float]:
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    return (1 - 1 / gamma) ** 2, (1 + 1 / gamma) ** 2


def mp_density(x, gamma: float):
    """Marcenko-Pastur density for M/N = gamma^2."""
    b1, b2 = mp_support(gamma)
    x = np.asarray(x, dtype=float)
    inside = (x > b1) & (x < b2)
    xs = np.where(inside, x, 0.5 * (b1 + b2))
    val = gamma**2 / (2 * np.pi * xs) * np.sqrt(np.clip((xs - b1) * (b2 - xs), 0, None))
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


def mp_cdf(x: float, gamma: float) -> float:
    """Marcenko-Pastur distribution function, integrated with algebraic weights."""
    b1, b2 = mp_support(gamma)
    if x <= b1:
        return 0.0
    if x >= b2:
        return 1.0
    c = gamma**2 / (2 * np.pi)
    if b1 == 0:
        # sqrt(t) / t = t^{-1/2}
        val = integrate.quad(lambda t: c * np.sqrt(b2 - t), 0.0, x, weight="alg",
                             wvar=(-0.5, 0.0), epsabs=1e-13, epsrel=1e-12)[0]
    else:
        val = integrate.quad(lambda t: c * np.sqrt(b2 - t) / t, b1, x, weight="alg",
                             wvar=(0.5, 0.0), epsabs=1e-13, epsrel=1e-12)[0]
    return float(min(max(val, 0.0), 1.0))


# ---------------------------------------------------------------------------
# empirical distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ECDF:
    """Right-continuous step function with jumps at the sorted samples."""

    points: np.ndarray

    @property
    def n(self) -> int:
        return len(self.points)

    def __call__(self, x):
        return np.searchsorted(self.points, x, side="right") / self.n


def empirical_cdf(samples: Iterable[float]) -> ECDF:
    pts = np.sort(np.asarray(list(samples) if not isinstance(samples, np.ndarray) else samples,
                             dtype=float))
    if pts.size == 0:
        raise ValueError("empirical_cdf needs at least one sample")
    return ECDF(pts)


def ks_statistic(ecdf: ECDF | Sequence[float], cdf: Callable) -> float:
    """sup |ECDF - F|, checked on both sides of every jump."""
    if not isinstance(ecdf, ECDF):
        ecdf = empirical_cdf(ecdf)
    x = ecdf.points
    F = None
    if ecdf.n > 1:  # a size-1 array would slip through scalar-only callables
        try:
            F = np.asarray(cdf(x), dtype=float)
            if F.shape != x.shape:
                F = None
        except (TypeError, ValueError):
            F = None
    if F is None:
        F = np.array([cdf(float(v)) for v in x])
    n = ecdf.n
    hi = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    return float(max(np.max(hi - F), np.max(F - lo)))


# ---------------------------------------------------------------------------
# Monte Carlo maxima
# ---------------------------------------------------------------------------

def thread_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return 1


def _max_eigs(args) -> np.ndarray:
    params, diag, seed, start, stop = args
    sd = np.sqrt(diag)
    dim = params.N * (2 if params.beta == 4 else 1)
    out = np.empty(stop - start)
    for k, idx in enumerate(range(start, stop)):
        X = _gaussian_block(params, sd, sample_rng(seed, idx))
        S = X @ X.conj().T / params.M
        out[k] = linalg.eigvalsh(S, subset_by_index=[dim - 1, dim - 1])[0]
    return out


def sample_max_eigenvalues(spec: SpikeSpec, params: ModelParams, n_samples: int, seed: int,
                           threads: int | None = None) -> np.ndarray:
    """Largest sample eigenvalue of ``n_samples`` independent draws.

    Sample ``i`` always uses the stream ``sample_rng(seed, i)``, so the result
    does not depend on the number of worker processes.
    """
    diag = np.diag(build_covariance(spec, params.N))
    workers = min(thread_count(threads), max(1, n_samples))
    if workers == 1:
        return _max_eigs((params, diag, seed, 0, n_samples))
    edges = np.linspace(0, n_samples, workers + 1).astype(int)
    jobs = [(params, diag, seed, int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return np.concatenate(list(pool.map(_max_eigs, jobs)))


def spectrum_to_csv(spec: Spectrum) -> str:
    lines = ["index,eigenvalue"]
    lines += [f"{i},{v:.17g}" for i, v in enumerate(spec.eigenvalues)]
    return "\n".join(lines) + "\n"
