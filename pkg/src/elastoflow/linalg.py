"""Shared sparse linear algebra: Dirichlet elimination and a diagonal-preconditioned CG.

The CG loop is written out rather than delegated so that a loss of positive
definiteness surfaces as a typed error instead of silent stagnation, and so
that every reduction runs in a fixed order (einsum, single-threaded) for
byte-reproducible results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = [
    "ConvergenceError",
    "IndefiniteOperatorError",
    "PcgResult",
    "pcg",
    "eliminate_dirichlet",
    "reinsert_dirichlet",
]


class ConvergenceError(RuntimeError):
    """Iterative solve did not reach the requested tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (relative residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class IndefiniteOperatorError(RuntimeError):
    """CG met a direction of non-positive curvature: the operator is not SPD."""


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    # einsum keeps a fixed, single-threaded accumulation order regardless of
    # BLAS thread settings, which the reproducibility contract relies on.
    return float(np.einsum("i,i->", a, b))


@dataclass(frozen=True)
class PcgResult:
    x: np.ndarray
    iterations: int
    relative_residual: float


def pcg(A: sp.spmatrix, b: np.ndarray, *, tol: float = 1e-8, max_iter: int = 10_000,
        x0: np.ndarray | None = None) -> PcgResult:
    """Diagonal-preconditioned conjugate gradients for an SPD operator.

    Stops when ||b - A x|| <= tol * ||b||. Raises ConvergenceError when the
    iteration budget is exhausted and IndefiniteOperatorError on negative
    curvature.
    """
    A = A.tocsr()
    n = A.shape[0]
    if n == 0:
        return PcgResult(np.zeros(0), 0, 0.0)
    b = np.asarray(b, dtype=np.float64)
    norm_b = np.sqrt(_dot(b, b))
    if norm_b == 0.0:
        return PcgResult(np.zeros(n), 0, 0.0)

    diag = A.diagonal().copy()
    diag[diag <= 0] = 1.0  # pure-Neumann rows can carry zero diagonal off the kernel

    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    r = b - A @ x
    z = r / diag
    p = z.copy()
    rz = _dot(r, z)

    for k in range(1, max_iter + 1):
        Ap = A @ p
        pAp = _dot(p, Ap)
        if pAp <= 0.0:
            raise IndefiniteOperatorError(
                f"non-positive curvature p^T A p = {pAp:.3e} at iteration {k}; "
                "operator violates the positivity hypotheses")
        gamma = rz / pAp
        x = x + gamma * p
        r = r - gamma * Ap
        rel = np.sqrt(_dot(r, r)) / norm_b
        if rel <= tol:
            # recurrence residuals drift; confirm with the true residual
            true_r = b - A @ x
            true_rel = np.sqrt(_dot(true_r, true_r)) / norm_b
            if true_rel <= 10 * tol:
                return PcgResult(x, k, true_rel)
            r = true_r
        z = r / diag
        rz_next = _dot(r, z)
        beta = rz_next / rz
        p = z + beta * p
        rz = rz_next

    rel = float(np.sqrt(_dot(b - A @ x, b - A @ x)) / norm_b)
    raise ConvergenceError("pcg did not converge", rel, max_iter)


def eliminate_dirichlet(A: sp.spmatrix, rhs: np.ndarray, pinned_mask: np.ndarray,
                        pinned_values: np.ndarray):
    """Remove pinned unknowns from an assembled symmetric system.

    Returns (A_ff, rhs_f, free_index) where free_index maps full dof index to
    its position among the free unknowns (-1 when pinned).
    """
    A = A.tocsr()
    n = A.shape[0]
    pinned_mask = np.asarray(pinned_mask, dtype=bool)
    free = ~pinned_mask
    free_index = np.full(n, -1, dtype=np.int64)
    free_index[free] = np.arange(int(free.sum()))

    A_ff = A[free][:, free].tocsr()
    rhs_f = rhs[free].copy()
    if pinned_mask.any():
        w = np.asarray(pinned_values, dtype=np.float64)[pinned_mask]
        rhs_f -= A[free][:, pinned_mask] @ w
    return A_ff, rhs_f, free_index


def reinsert_dirichlet(x_free: np.ndarray, pinned_mask: np.ndarray,
                       pinned_values: np.ndarray) -> np.ndarray:
    full = np.asarray(pinned_values, dtype=np.float64).copy()
    full[~pinned_mask] = x_free
    return full
