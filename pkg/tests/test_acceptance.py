"""Acceptance run: thirteen criteria, each at its stated tolerance.

Every test records a single PASS/FAIL line; the lines are repeated in the
pytest terminal summary under "acceptance criteria".
"""
from __future__ import annotations

import time

import numpy as np
import pytest

from spiked_spectra import distributions as dist
from spiked_spectra import ensembles as ens
from spiked_spectra import finite_kernels as fk
from spiked_spectra import verify
from spiked_spectra.ensembles import DivisionAlgebra, ModelParams, SpikeSpec

GRID = np.arange(-5.0, 2.0 + 1e-9, 0.5)
ORDER = 2 * 60  # default quadrature order, doubled for the acceptance run
SAMPLES = 5000
SEED = 20240531


def mc_ks(beta: int, M: int, a: float | None, law: str, t: int | None = None) -> float:
    params = ModelParams.from_ratio(beta, M, 4.0)
    spec = SpikeSpec() if a is None else SpikeSpec((a,), (1,))
    regime = ens.classify_regime(a, params)
    maxima = ens.sample_max_eigenvalues(spec, params, SAMPLES, SEED)
    return ens.ks_statistic(ens.rescale_max(maxima, regime), dist.tabulated_cdf(law, t))


def test_criterion_01_dual_backends(acceptance_report):
    start = time.perf_counter()
    gue = max(abs(dist.f_gue(T, dist.FREDHOLM, order=ORDER) - dist.f_gue(T, dist.PAINLEVE)) for T in GRID)
    gse = max(abs(dist.f_gse(T, dist.FREDHOLM, order=ORDER) - dist.f_gse(T, dist.PAINLEVE)) for T in GRID)
    seconds = time.perf_counter() - start
    ok = gue < 1e-6 and gse < 1e-5 and seconds < 60
    acceptance_report(1, "dual-backend agreement", ok,
                      f"GUE {gue:.2e} (<1e-6), GSE {gse:.2e} (<1e-5), {seconds:.1f}s (<60s)")
    assert ok


def test_criterion_02_gue1_is_goe_squared(acceptance_report):
    dev = max(abs(dist.f_gue_t(T, 1, order=ORDER) - dist.f_goe(T) ** 2) for T in GRID)
    acceptance_report(2, "F_GUE1 = F_GOE^2", dev < 1e-5, f"max deviation {dev:.2e} (<1e-5)")
    assert dev < 1e-5


def test_criterion_03_gse1_is_goe(acceptance_report):
    dev = max(abs(dist.f_gse1(T, order=ORDER) - dist.f_goe(T)) for T in GRID)
    acceptance_report(3, "F_GSE1 = F_GOE", dev < 1e-5, f"max deviation {dev:.2e} (<1e-5)")
    assert dev < 1e-5


def test_criterion_04_g1_is_gaussian(acceptance_report):
    grid = np.arange(-6.0, 6.01, 0.25)
    dev = max(abs(dist.g_t(T, 1) - dist.gaussian_cdf(T)) for T in grid)
    acceptance_report(4, "G_1 = Phi", dev < 1e-9, f"max deviation {dev:.2e} (<1e-9)")
    assert dev < 1e-9


def test_criterion_05_marcenko_pastur(acceptance_report):
    start = time.perf_counter()
    d = verify.mp_histogram_distance(N=1000, gamma_sq=4.0, seed=SEED)
    seconds = time.perf_counter() - start
    ok = d < 0.05 and seconds < 30
    acceptance_report(5, "Marcenko-Pastur histogram", ok, f"sup distance {d:.4f} (<0.05), {seconds:.1f}s (<30s)")
    assert ok


def test_criterion_06_subcritical(acceptance_report):
    ks = mc_ks(2, 400, 0.3, "gue")
    acceptance_report(6, "subcritical a=0.3 vs F_GUE", ks < 0.06, f"KS {ks:.4f} (<0.06)")
    assert ks < 0.06


def test_criterion_07_critical(acceptance_report):
    ks = mc_ks(2, 400, 0.5, "gue_t", 1)
    acceptance_report(7, "critical a=0.5 vs F_GUE1", ks < 0.08, f"KS {ks:.4f} (<0.08)")
    assert ks < 0.08


def test_criterion_08_supercritical(acceptance_report):
    ks = mc_ks(2, 400, 1.5, "normal")
    acceptance_report(8, "supercritical a=1.5 vs Phi", ks < 0.05, f"KS {ks:.4f} (<0.05)")
    assert ks < 0.05


def test_criterion_09_quaternion(acceptance_report):
    ks_sup = mc_ks(4, 200, 1.5, "normal")
    ks_crit = mc_ks(4, 200, 0.5, "gse1")
    ok = ks_sup < 0.05 and ks_crit < 0.08
    acceptance_report(9, "quaternion laws", ok,
                      f"a=1.5 KS {ks_sup:.4f} (<0.05), a=0.5 vs F_GSE1 KS {ks_crit:.4f} (<0.08)")
    assert ok


def test_criterion_10_finite_n_exactness(acceptance_report):
    N, M, a = 2, 3, 0.5
    params = ModelParams(DivisionAlgebra.COMPLEX, N, M)
    spec = SpikeSpec((a,), (1,))
    system = fk.ComplexSpikedSystem(params, spec)
    Ts = np.array([0.5, 1.0, 1.5, 2.0, 3.0, 4.0])
    det = np.array([system.gap_probability(T) for T in Ts])
    quad = fk.max_cdf_two_by_quadrature(2, M, a, Ts)
    n = 100_000
    maxima = ens.sample_max_eigenvalues(spec, params, n, SEED)
    mc = np.array([np.mean(maxima <= T) for T in Ts])
    se = np.sqrt(det * (1 - det) / n)
    pair = float(np.abs(det - quad).max())
    z = float(np.max(np.abs(mc - det) / se))
    ok = pair < 1e-4 and z < 3
    acceptance_report(10, "finite-N exactness", ok, f"det vs quadrature {pair:.2e} (<1e-4), MC max {z:.2f} SE (<3)")
    assert ok


def test_criterion_11_orthogonality(acceptance_report):
    bio = fk.ComplexSpikedSystem(ModelParams(DivisionAlgebra.COMPLEX, 6, 8),
                                 SpikeSpec((0.3, 0.9), (1, 1))).biorthonormality_check()
    skew = fk.QuaternionSkewSystem(ModelParams(DivisionAlgebra.QUATERNION, 3, 5), 0.4).skew_orthogonality_check()
    ok = bio < 1e-7 and skew < 1e-7
    acceptance_report(11, "biorthonormality / skew-orthogonality", ok,
                      f"complex {bio:.2e}, quaternion {skew:.2e} (<1e-7)")
    assert ok


def test_criterion_12_symmetric_functions(acceptance_report):
    names = ["hook_products", "schur_specializations", "quaternion_zonal_rows", "confluent_vandermonde",
             "jack_power_sum"]
    results = verify.run_suite(names)
    bad = [r.name for r in results if not r.passed]
    failures = sum(r.deviation for r in results if np.isfinite(r.deviation))
    acceptance_report(12, "exact symmetric-function suite", not bad,
                      f"{len(results)} checks, {failures:.0f} failing cases" + (f" in {bad}" if bad else ""))
    assert not bad


def test_criterion_13_convergence_probe(acceptance_report):
    rows = fk.convergence_probe("white", [40, 80, 160])
    d = [r.sup_distance for r in rows]
    ok = d[0] > d[1] > d[2]
    acceptance_report(13, "white convergence probe", ok,
                      "sup distances " + ", ".join(f"M={r.M}: {r.sup_distance:.4f}" for r in rows))
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
