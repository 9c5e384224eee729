"""Spectral analysis of the normal operator in a given basis."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .assembly import toeplitz_stencil
from .errors import DegenerateSystem
from .linalg import DEFAULT_TOL, GeneralizedEigen


@dataclass(frozen=True)
class Fsoi:
    """Identifiable subspace: leading ``K`` generalized eigenpairs of (A, B)."""

    K: int
    eig: GeneralizedEigen
    tol: float

    @property
    def eigvals(self) -> np.ndarray:
        return self.eig.eigvals

    @property
    def eigvecs(self) -> np.ndarray:
        return self.eig.eigvecs

    @property
    def basis(self) -> np.ndarray:
        """Coefficient vectors of the identifiable eigenfunctions (columns)."""
        return self.eig.eigvecs[:, : self.K]


def decompose(A, B, tol: float = DEFAULT_TOL) -> Fsoi:
    """Eigen-decompose the normal operator and count its identifiable modes.

    ``K`` is the number of eigenvalues above ``tol * lam_1``.

    Raises
    ------
    DegenerateSystem
        If the operator is zero.
    """
    eig = linalg.gen_eig(A, B, tol)
    lam = eig.eigvals
    if not lam[0] > 0 or not np.any(np.asarray(A) != 0):
        raise DegenerateSystem("degenerate system: the regression matrix is zero")
    K = int(np.sum(lam > tol * lam[0]))
    return Fsoi(K=K, eig=eig, tol=tol)


def rkhs_gram(A, B, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Basis Gram matrix in the data-adaptive RKHS norm, ``B pinv(A) B``."""
    B = np.asarray(B, dtype=float)
    G = B @ linalg.pinv(A, tol) @ B
    return 0.5 * (G + G.T)


def trace_LG(fsoi: Fsoi) -> float:
    """Trace of the normal operator, the sum of its eigenvalues."""
    return float(np.sum(fsoi.eigvals))


def gbar_trace(us, rho) -> float:
    """Trace of the normal operator from the diagonal of its integral kernel.

    For Toeplitz data ``G(r, s) = (1/N) sum_k <u^k_{. - r}, u^k_{. - s}>`` and
    the trace is ``sum_r G(r, r) / rho(r)`` over atoms with ``rho(r) > 0``.
    """
    U = np.atleast_2d(np.asarray(us, dtype=float))
    G = sum(np.sum(toeplitz_stencil(u) ** 2, axis=0) for u in U) / U.shape[0]
    w = np.asarray(rho.weights)
    pos = w > 0
    return float(np.sum(G[pos] / w[pos]))


def coeff_cov_operator_trace(Q, B, tol: float = DEFAULT_TOL) -> float:
    """Trace of the covariance operator represented by coefficient covariance Q.

    Sum of the generalized eigenvalues of ``(B Q B, B)``, which equals
    ``trace(Q B)``.
    """
    Q = np.asarray(Q, dtype=float)
    B = np.asarray(B, dtype=float)
    eig = linalg.gen_eig(B @ Q @ B, B, tol)
    return float(np.sum(eig.eigvals))
