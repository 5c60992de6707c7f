"""Sup distance between exact finite-N gap probabilities and the limit law."""
from __future__ import annotations

from spiked_spectra import finite_kernels as fk

CASES = [
    ("white", 2, None, [40, 80, 160]),
    ("critical", 2, None, [40, 80, 160]),
    ("supercritical", 2, 1.5, [40, 80, 160]),
    ("white", 4, None, [40, 80, 160]),
]


def main() -> None:
    print("regime,beta,M,N,sup_distance")
    for regime, beta, a, Ms in CASES:
        for row in fk.convergence_probe(regime, Ms, beta=beta, a=a):
            print(f"{regime},{beta},{row.M},{row.N},{row.sup_distance:.4f}")


if __name__ == "__main__":
    main()
