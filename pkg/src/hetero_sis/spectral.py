"""Dominant eigenvalues of non-negative and Metzler matrices by power iteration."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order

DEFAULT_TOL = 1e-10


class SpectralError(ArithmeticError):
    pass


class NotConverged(SpectralError):
    def __init__(self, rho: float, residual: float, iterations: int):
        self.rho = rho
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"power iteration did not converge in {iterations} iterations "
                         f"(rho~{rho:.12g}, residual {residual:.3e})")


class SparseNonneg:
    """Square sparse matrix with non-negative entries (CSR storage)."""

    def __init__(self, matrix):
        m = sp.csr_matrix(matrix, dtype=np.float64)
        m.eliminate_zeros()
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"matrix must be square, got {m.shape}")
        if m.nnz and m.data.min() < 0:
            raise ValueError("matrix has negative entries")
        self.matrix = m

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, v):
        return self.matrix @ v

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        m = self.matrix
        sl = slice(m.indptr[i], m.indptr[i + 1])
        return m.indices[sl], m.data[sl]

    def scale(self, alpha: float) -> "SparseNonneg":
        return SparseNonneg(self.matrix * alpha)


@dataclass(frozen=True)
class SpectralResult:
    rho: float
    vector: np.ndarray
    iterations: int
    residual: float
    irreducible: Optional[bool] = None


def default_max_iter(n: int) -> int:
    return 100 * n + 1000


def spectral_radius(M: SparseNonneg, tol: float = DEFAULT_TOL, max_iter: Optional[int] = None,
                    check_irreducible: bool = False) -> SpectralResult:
    """Perron root and vector of a non-negative matrix.

    Iterates ``v <- (v + M v / rho) / 2`` from the uniform vector, i.e. the
    average of two successive power iterates, which removes the period-2
    oscillation of bipartite-like patterns without moving the fixed point.
    Stops once successive estimates ``rho = |M v|_1`` (with ``|v|_1 = 1``)
    agree to ``tol`` relative.
    """
    A = M.matrix if isinstance(M, SparseNonneg) else SparseNonneg(M).matrix
    n = A.shape[0]
    if max_iter is None:
        max_iter = default_max_iter(n)
    irreducible = is_irreducible(A) if check_irreducible else None
    v = np.full(n, 1.0 / n)
    rho_prev = None
    for it in range(1, max_iter + 1):
        w = A @ v
        rho = float(w.sum())
        if rho == 0.0:
            return SpectralResult(0.0, v, it, 0.0, irreducible)
        if rho_prev is not None and abs(rho - rho_prev) <= tol * rho:
            residual = float(np.abs(w - rho * v).max())
            return SpectralResult(rho, v, it, residual, irreducible)
        rho_prev = rho
        v = 0.5 * (v + w / rho)
        v /= v.sum()
    w = A @ v
    raise NotConverged(rho, float(np.abs(w - w.sum() * v).max()), max_iter)


def spectral_abscissa_metzler(M_nonneg: SparseNonneg, D, tol: float = DEFAULT_TOL,
                              max_iter: Optional[int] = None, shift: Optional[float] = None) -> float:
    """Largest real part of the eigenvalues of ``M_nonneg - diag(D)``.

    ``D`` must be positive. The matrix is shifted by ``s * I`` with
    ``s >= max(D)`` so that it becomes non-negative; its Perron root minus
    ``s`` is the abscissa.
    """
    A = M_nonneg.matrix if isinstance(M_nonneg, SparseNonneg) else SparseNonneg(M_nonneg).matrix
    D = np.broadcast_to(np.asarray(D, dtype=float), (A.shape[0],))
    if np.any(D <= 0):
        raise ValueError("D must be strictly positive")
    s = float(D.max()) if shift is None else float(shift)
    if s < D.max():
        raise ValueError("shift must be >= max(D)")
    shifted = SparseNonneg(A + sp.diags(s - D))
    return spectral_radius(shifted, tol, max_iter).rho - s


def is_irreducible(M) -> bool:
    """True when the directed graph of non-zero entries is strongly connected."""
    A = M.matrix if isinstance(M, SparseNonneg) else sp.csr_matrix(M)
    n = A.shape[0]
    if n <= 1:
        return True
    pattern = (A != 0).astype(np.int8).tocsr()
    fwd = breadth_first_order(pattern, 0, directed=True, return_predecessors=False)
    if len(fwd) < n:
        return False
    bwd = breadth_first_order(pattern.T.tocsr(), 0, directed=True, return_predecessors=False)
    return len(bwd) == n
