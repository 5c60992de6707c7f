"""Monte Carlo KS distances against each candidate law across spike values."""
from __future__ import annotations

import argparse

import numpy as np

from spiked_spectra import distributions as dist
from spiked_spectra import ensembles as ens
from spiked_spectra.ensembles import ModelParams, SpikeSpec

CANDIDATES = {"F_GUE": ("gue", None), "F_GUE1": ("gue_t", 1), "Phi": ("normal", None)}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--m", type=int, default=200)
    parser.add_argument("--samples", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    params = ModelParams.from_ratio(2, args.m, 4.0)
    cdfs = {k: dist.tabulated_cdf(*v) for k, v in CANDIDATES.items()}
    edge = ens.classify_regime(None, params)
    print("a,regime," + ",".join(f"ks_{k}" for k in cdfs))
    for a in np.arange(0.0, 1.51, 0.25):
        regime = ens.classify_regime(a, params)
        maxima = ens.sample_max_eigenvalues(SpikeSpec((a,), (1,)), params, args.samples, args.seed)
        ks = []
        for name, cdf in cdfs.items():
            # the Gaussian law only has a scaling above the threshold
            if name == "Phi":
                if regime.tag is not ens.Regime.SUPERCRITICAL:
                    ks.append(float("nan"))
                    continue
                xi = ens.rescale_max(maxima, regime)
            else:
                xi = ens.rescale_max(maxima, edge)
            ks.append(ens.ks_statistic(xi, cdf))
        print(f"{a:.2f},{regime.tag.value}," + ",".join(f"{v:.4f}" for v in ks))

if __name__ == "__main__":
    main()
