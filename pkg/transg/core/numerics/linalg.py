import logging
from typing import Tuple

import numpy as np

from ..errors import ContractViolation

logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-10


def _check_symmetric(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ContractViolation(f"sym_eig needs a square matrix, got shape {M.shape}")
    asymmetry = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if asymmetry > SYMMETRY_TOLERANCE:
        raise ContractViolation(
            f"sym_eig needs a symmetric matrix; max |M - M^T| = {asymmetry:.3e}"
        )
    return M


def fix_signs(vectors: np.ndarray, tie_tolerance: float = 1e-12) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive.

    Entries within ``tie_tolerance`` of the maximum magnitude count as tied and
    the first of them decides.
    """
    fixed = vectors.copy()
    for col in range(fixed.shape[1]):
        magnitudes = np.abs(fixed[:, col])
        if magnitudes.size == 0:
            continue
        pivot = int(np.argmax(magnitudes >= magnitudes.max() - tie_tolerance))
        if fixed[pivot, col] < 0:
            fixed[:, col] = -fixed[:, col]
    return fixed


def jacobi_eigh(
    M: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100
) -> Tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi rotations on a symmetric matrix; unsorted output."""
    A = M.copy()
    n = A.shape[0]
    V = np.eye(n)
    scale = max(float(np.linalg.norm(A)), 1.0)
    for sweep in range(max_sweeps):
        off = float(np.sqrt(np.sum(np.tril(A, -1) ** 2)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with the rotation acting on rows/cols p, q
                rows_p, rows_q = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rows_p - s * rows_q
                A[q, :] = s * rows_p + c * rows_q
                cols_p, cols_q = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * cols_p - s * cols_q
                A[:, q] = s * cols_p + c * cols_q
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        logger.warning(f"Jacobi did not converge in {max_sweeps} sweeps (n={n})")
    return np.diag(A).copy(), V


def sym_eig(M, method: str = "eigh") -> Tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix.

    Returns eigenvalues ascending and orthonormal eigenvectors as columns, each
    sign-fixed by ``fix_signs``. ``method`` is ``"eigh"`` (LAPACK) or
    ``"jacobi"``.
    """
    M = _check_symmetric(M)
    if method == "eigh":
        values, vectors = np.linalg.eigh(M)
    elif method == "jacobi":
        values, vectors = jacobi_eigh(M)
    else:
        raise ValueError(f"Unsupported eigensolver: {method}")
    order = np.argsort(values, kind="stable")
    return values[order], fix_signs(vectors[:, order])
