"""Largest eigenvalue of spiked real, complex and quaternion Wishart matrices.

Submodules:

- ``ensembles``: sampling, Marcenko-Pastur law, regime classification
- ``specfun``: Airy integrals, Painleve II, contour functions, Laguerre and Hermite functions
- ``fredholm``: Gauss-Legendre Fredholm determinants (scalar and 2x2 block)
- ``distributions``: F_GUE, F_GOE, F_GSE, F_GUE_t, F_GSE1, G_t
- ``symfun``: partitions, Schur, zonal and Jack polynomials
- ``finite_kernels``: finite-N correlation kernels and gap probabilities
- ``verify``: the identity suite behind ``spiked-spectra verify``
"""
from __future__ import annotations

from . import distributions, ensembles, finite_kernels, fredholm, specfun, symfun

__version__ = "0.1.0"

__all__ = ["distributions", "ensembles", "finite_kernels", "fredholm", "specfun", "symfun",
           "__version__"]
