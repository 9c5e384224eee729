"""Dense symmetric linear algebra used throughout the package."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DimensionMismatch, IndefiniteMatrix, NonSymmetric, NotPositiveDefinite

DEFAULT_TOL = 1e-12
SYM_TOL = 1e-10


def as_sym(A, name="matrix", sym_tol=SYM_TOL) -> np.ndarray:
    """Validate a square symmetric matrix and return its exact symmetrization.

    Raises
    ------
    NonSymmetric
        If ``A`` is not square or ``|A - A.T|`` exceeds ``sym_tol * max|A|``.
    """
    A = np.array(A, dtype=float, copy=True)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise NonSymmetric(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    scale = np.abs(A).max() if A.size else 0.0
    if np.abs(A - A.T).max() > sym_tol * max(scale, 1.0):
        raise NonSymmetric(f"{name} is not symmetric")
    return 0.5 * (A + A.T)


def _fix_signs(V: np.ndarray) -> np.ndarray:
    # first entry with |v| > 1e-8 is made positive
    V = V.copy()
    for k in range(V.shape[1]):
        idx = np.flatnonzero(np.abs(V[:, k]) > 1e-8)
        if idx.size and V[idx[0], k] < 0:
            V[:, k] = -V[:, k]
    return V


@dataclass(frozen=True)
class GeneralizedEigen:
    """Solution of ``A V = B V diag(eigvals)`` with ``V.T B V = I``.

    Attributes
    ----------
    eigvals : ndarray
        Eigenvalues sorted in descending order.
    eigvecs : ndarray
        Columns are the B-orthonormal eigenvectors.
    b_metric : ndarray
        The metric matrix ``B`` that was used.
    """

    eigvals: np.ndarray
    eigvecs: np.ndarray
    b_metric: np.ndarray


def cholesky_pd(B, tol=DEFAULT_TOL) -> np.ndarray:
    """Lower Cholesky factor of ``B`` after checking it is numerically PD."""
    B = as_sym(B, "B")
    w = np.linalg.eigvalsh(B)
    if w[0] <= tol * max(w[-1], 0.0) or w[-1] <= 0:
        raise NotPositiveDefinite(
            f"B is not positive definite (eigenvalue range {w[0]:.3e}..{w[-1]:.3e})"
        )
    try:
        return np.linalg.cholesky(B)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - caught by the check above
        raise NotPositiveDefinite(str(exc)) from exc


def gen_eig(A, B, tol=DEFAULT_TOL) -> GeneralizedEigen:
    """Generalized symmetric-definite eigenproblem by Cholesky whitening.

    Parameters
    ----------
    A : array_like
        Symmetric positive semi-definite matrix.
    B : array_like
        Symmetric positive definite metric.
    tol : float
        Relative threshold for the positive-definiteness check of ``B``.

    Returns
    -------
    GeneralizedEigen
        Eigenvalues in descending order; each eigenvector column has its first
        significant entry positive.
    """
    A = as_sym(A, "A")
    B = as_sym(B, "B")
    if A.shape != B.shape:
        raise DimensionMismatch(f"A {A.shape} and B {B.shape} differ")
    L = cholesky_pd(B, tol)
    Linv_A = sla.solve_triangular(L, A, lower=True)
    W = sla.solve_triangular(L, Linv_A.T, lower=True)
    W = 0.5 * (W + W.T)
    lam, U = np.linalg.eigh(W)
    lam, U = lam[::-1], U[:, ::-1]
    V = sla.solve_triangular(L.T, U, lower=False)
    return GeneralizedEigen(eigvals=lam, eigvecs=_fix_signs(V), b_metric=B)


def psd_sqrt(A, tol=DEFAULT_TOL) -> np.ndarray:
    """Symmetric square root of a PSD matrix.

    Eigenvalues in ``[-tol * lam_max, 0)`` are clamped to zero.

    Raises
    ------
    IndefiniteMatrix
        If an eigenvalue is below ``-tol * lam_max``.
    """
    A = as_sym(A, "A")
    w, U = np.linalg.eigh(A)
    wmax = max(np.abs(w).max(), 0.0)
    if w[0] < -tol * wmax:
        raise IndefiniteMatrix(f"matrix has eigenvalue {w[0]:.3e} < -tol*{wmax:.3e}")
    w = np.clip(w, 0.0, None)
    S = (U * np.sqrt(w)) @ U.T
    return 0.5 * (S + S.T)


def pinv(A, tol=DEFAULT_TOL) -> np.ndarray:
    """Pseudo-inverse of a symmetric PSD matrix.

    Eigenvalues at or below ``tol * lam_max`` are treated as zero.
    """
    A = as_sym(A, "A")
    w, U = np.linalg.eigh(A)
    wmax = np.abs(w).max()
    keep = w > tol * wmax if wmax > 0 else np.zeros_like(w, dtype=bool)
    P = (U[:, keep] / w[keep]) @ U[:, keep].T
    return 0.5 * (P + P.T)


def range_basis(A, tol=DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical range of a PSD matrix."""
    A = as_sym(A, "A")
    w, U = np.linalg.eigh(A)
    wmax = np.abs(w).max()
    if wmax == 0:
        return U[:, :0]
    return U[:, w > tol * wmax]


def range_residual(A, b, tol=DEFAULT_TOL) -> float:
    """Relative norm of the part of ``b`` outside the range of ``A``.

    Returns ``||(I - P) b|| / max(||b||, eps)`` where ``P`` projects onto the
    eigenvectors of ``A`` with eigenvalue above ``tol * lam_max``.
    """
    A = as_sym(A, "A")
    b = np.asarray(b, dtype=float).ravel()
    if b.size != A.shape[0]:
        raise DimensionMismatch(f"b has length {b.size}, A is {A.shape}")
    U = range_basis(A, tol)
    r = b - U @ (U.T @ b)
    return float(np.linalg.norm(r) / max(np.linalg.norm(b), np.finfo(float).eps))
