"""Nystrom discretization of Fredholm determinants on [T, T+L]."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

Kernel = Callable[[np.ndarray, np.ndarray], np.ndarray]
MatrixKernel2 = Sequence[Sequence[Kernel]]

DEFAULT_L = 16.0
DEFAULT_ORDER = 60

__all__ = [
    "KernelEvaluationError",
    "QuadratureGrid",
    "make_grid",
    "det_scalar",
    "det_matrix2",
    "det_finite_rank",
    "conjugate_kernel",
    "conjugate_matrix_kernel",
    "nystrom_matrix",
]


class KernelEvaluationError(ArithmeticError):
    """A kernel returned a non-finite value on the quadrature grid."""


@dataclass(frozen=True)
class QuadratureGrid:
    T: float
    nodes: np.ndarray
    weights: np.ndarray
    order: int
    L: float

    @property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.weights)


def make_grid(T: float, order: int = DEFAULT_ORDER, L: float = DEFAULT_L) -> QuadratureGrid:
    """Gauss-Legendre rule of the given order mapped onto [T, T+L]."""
    if L <= 0:
        raise ValueError(f"truncation length must be positive, got {L}")
    if order < 1:
        raise ValueError(f"order must be positive, got {order}")
    x, w = leggauss(order)
    return QuadratureGrid(
        T=float(T),
        nodes=T + 0.5 * L * (x + 1.0),
        weights=0.5 * L * w,
        order=order,
        L=float(L),
    )


def _evaluate(K: Kernel, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    vals = np.asarray(K(x[:, None], y[None, :]), dtype=float)
    vals = np.broadcast_to(vals, (len(x), len(y)))
    if not np.all(np.isfinite(vals)):
        i, j = np.argwhere(~np.isfinite(vals))[0]
        raise KernelEvaluationError(
            f"kernel is not finite at (x, y) = ({x[i]:.6g}, {y[j]:.6g})"
        )
    return vals


def nystrom_matrix(K: Kernel, grid: QuadratureGrid) -> np.ndarray:
    """The symmetrized matrix W^{1/2} K W^{1/2}."""
    sw = grid.sqrt_weights
    return sw[:, None] * _evaluate(K, grid.nodes, grid.nodes) * sw[None, :]


def det_scalar(K: Kernel, grid: QuadratureGrid) -> float:
    """det(I - K) restricted to the grid interval."""
    A = nystrom_matrix(K, grid)
    return float(np.linalg.det(np.eye(grid.order) - A))


def det_matrix2(K: MatrixKernel2, grid: QuadratureGrid) -> float:
    """det(I - K) for a 2x2 block kernel [[K11, K12], [K21, K22]]."""
    n = grid.order
    sw = grid.sqrt_weights
    A = np.empty((2 * n, 2 * n))
    for a in range(2):
        for b in range(2):
            blk = _evaluate(K[a][b], grid.nodes, grid.nodes)
            A[a * n:(a + 1) * n, b * n:(b + 1) * n] = sw[:, None] * blk * sw[None, :]
    return float(np.linalg.det(np.eye(2 * n) - A))


def det_finite_rank(
    fs: Sequence[Callable[[np.ndarray], np.ndarray]],
    gs: Sequence[Callable[[np.ndarray], np.ndarray]],
    grid: QuadratureGrid,
) -> float:
    """det(delta_ij - int f_i g_j) for the kernel sum_j f_j(x) g_j(y)."""
    if len(fs) != len(gs):
        raise ValueError(f"need equally many f and g, got {len(fs)} and {len(gs)}")
    m = len(fs)
    if m == 0:
        return 1.0
    F = np.array([np.broadcast_to(f(grid.nodes), grid.nodes.shape) for f in fs], dtype=float)
    G = np.array([np.broadcast_to(g(grid.nodes), grid.nodes.shape) for g in gs], dtype=float)
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(G))):
        raise KernelEvaluationError("finite-rank factor is not finite on the grid")
    gram = (G * grid.weights) @ F.T  # gram[i, j] = int g_i f_j
    return float(np.linalg.det(np.eye(m) - gram))


def conjugate_kernel(K: Kernel, w: Callable[[np.ndarray], np.ndarray]) -> Kernel:
    """(x, y) -> w(x) K(x, y) / w(y); the determinant is unchanged."""

    def conj(x, y):
        wx, wy = w(x), w(y)
        if np.any(np.asarray(wx) <= 0) or np.any(np.asarray(wy) <= 0):
            raise ValueError("conjugating weight must be positive")
        return wx * K(x, y) / wy

    return conj


def conjugate_matrix_kernel(K: MatrixKernel2, d1, d2) -> list[list[Kernel]]:
    """Block conjugation by diag(d1, d2): block (i, j) becomes d_i(x) K_ij d_j(y)^{-1}."""
    ds = (d1, d2)

    def block(i, j):
        di, dj = ds[i], ds[j]
        return lambda x, y: di(x) * K[i][j](x, y) / dj(y)

    return [[block(i, j) for j in range(2)] for i in range(2)]
