"""Gaussian priors and posteriors for the basis coefficients."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .assembly import RegressionSystem
from .errors import DimensionMismatch, IndefiniteMatrix


@dataclass(frozen=True)
class GaussianCoeff:
    """Gaussian law of a coefficient vector."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mean, dtype=float).ravel()
        Q = linalg.as_sym(self.cov, "cov")
        if Q.shape[0] != m.size:
            raise DimensionMismatch("mean and covariance sizes differ")
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "cov", Q)

    def to_json(self) -> dict:
        return {"mean": self.mean.tolist(), "cov": self.cov.tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> "GaussianCoeff":
        return cls(doc["mean"], doc["cov"])


class AdaptiveFactor:
    """Reusable factorization for ``(A + lam B pinv(A) B)^{-1}``-type solves.

    With ``D = B^{-1} A^{1/2}``, restricted to the numerical range of ``A``,
    the regularized inverse is ``D (D^T A D + lam I)^{-1} D^T``, which never
    inverts ``A``. The inner
    matrix is diagonalized once so any number of ``lam`` values and right-hand
    sides are cheap.
    """

    def __init__(self, A, B, tol: float = linalg.DEFAULT_TOL):
        A = linalg.as_sym(A, "A")
        B = linalg.as_sym(B, "B")
        self.tol = tol
        # restrict to the numerical range of A so roundoff eigenvalues are not
        # amplified by the 1 / (mu + lam) filter
        w, U = np.linalg.eigh(A)
        wmax = np.abs(w).max()
        if w[0] < -max(tol, 1e-10) * wmax:
            raise IndefiniteMatrix(f"A has eigenvalue {w[0]:.3e}")
        keep = w > tol * wmax
        half = U[:, keep] * np.sqrt(w[keep])
        self.D = np.linalg.solve(B, half)
        M = self.D.T @ A @ self.D
        mu, W = np.linalg.eigh(0.5 * (M + M.T))
        mu = np.clip(mu, 0.0, None)
        self.mu = mu
        self.DW = self.D @ W

    def _filter(self, lam):
        if lam > 0:
            return 1.0 / (self.mu + lam)
        if self.mu.size == 0:
            return self.mu
        cut = self.tol * self.mu.max()
        return np.where(self.mu > cut, 1.0 / np.where(self.mu > cut, self.mu, 1.0), 0.0)

    def solve(self, b, lam: float) -> np.ndarray:
        return self.DW @ (self._filter(lam) * (self.DW.T @ b))

    def inverse(self, lam: float) -> np.ndarray:
        S = (self.DW * self._filter(lam)) @ self.DW.T
        return 0.5 * (S + S.T)


def fixed_posterior(sys: RegressionSystem) -> GaussianCoeff:
    """Posterior under the standard normal coefficient prior.

    ``m1 = (A + s^2 I)^{-1} b`` and ``Q1 = s^2 (A + s^2 I)^{-1}``.
    """
    s2 = sys.sigma ** 2
    M = sys.A + s2 * np.eye(sys.size)
    m = np.linalg.solve(M, sys.b)
    Q = s2 * np.linalg.inv(M)
    return GaussianCoeff(m, 0.5 * (Q + Q.T))


def gaussian_posterior_mean(sys: RegressionSystem, Q0) -> np.ndarray:
    """Posterior mean ``(A + s^2 Q0^{-1})^{-1} b`` for a full-rank prior ``N(0, Q0)``."""
    s2 = sys.sigma ** 2
    return np.linalg.solve(sys.A + s2 * np.linalg.inv(Q0), sys.b)


def da_prior(sys: RegressionSystem, lambda_star: float) -> GaussianCoeff:
    """Data-adaptive prior ``N(0, B^{-1} A B^{-1} / lambda_star)``."""
    Binv_A = np.linalg.solve(sys.B, sys.A)
    Q = np.linalg.solve(sys.B, Binv_A.T) / lambda_star
    return GaussianCoeff(np.zeros(sys.size), 0.5 * (Q + Q.T))


def da_posterior(sys: RegressionSystem, lambda_star: float,
                 factor: AdaptiveFactor | None = None) -> GaussianCoeff:
    """Posterior under the data-adaptive prior, via the stabilized factorization.

    ``Q1 = s^2 D (D^T A D + s^2 lambda_star I)^{-1} D^T`` and ``m1 = Q1 b / s^2``.
    """
    if factor is None:
        factor = AdaptiveFactor(sys.A, sys.B)
    s2 = sys.sigma ** 2
    lam = s2 * lambda_star
    m = factor.solve(sys.b, lam)
    Q = s2 * factor.inverse(lam)
    return GaussianCoeff(m, Q)


def da_posterior_direct(sys: RegressionSystem, lambda_star: float) -> GaussianCoeff:
    """Same posterior from ``s^2 (A + s^2 lambda_star B pinv(A) B)^{-1}``.

    Only meaningful when ``A`` is invertible; kept as a cross-check.
    """
    s2 = sys.sigma ** 2
    M = sys.A + s2 * lambda_star * sys.B @ linalg.pinv(sys.A) @ sys.B
    Q = s2 * np.linalg.inv(0.5 * (M + M.T))
    return GaussianCoeff(Q @ sys.b / s2, 0.5 * (Q + Q.T))


def scaled_posterior_mean(sys: RegressionSystem, Q0, C0: float, beta: float) -> np.ndarray:
    """Posterior mean for the noise-scaled prior ``N(0, C0 s^{2 beta} Q0)``."""
    s2 = sys.sigma ** 2
    scale = C0 * sys.sigma ** (2 * beta)
    return np.linalg.solve(sys.A + (s2 / scale) * np.linalg.inv(Q0), sys.b)


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator (Philox) from an int, SeedSequence or Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def sample_posterior(g: GaussianCoeff, n: int, seed=0) -> np.ndarray:
    """Draw ``n`` samples ``m + S z`` with ``S = sqrt(Q)``; shape ``(n, l)``.

    Eigenvalues of ``Q`` below ``1e-12`` of the largest are treated as zero so
    samples of a rank-deficient posterior stay in ``m + Range(Q)``.
    """
    w, U = np.linalg.eigh(linalg.as_sym(g.cov))
    wmax = max(np.abs(w).max(), 0.0)
    if w.size and w[0] < -1e-8 * wmax:
        raise IndefiniteMatrix("posterior covariance is indefinite")
    w = np.where(w > linalg.DEFAULT_TOL * wmax, w, 0.0)
    S = (U * np.sqrt(w)) @ U.T
    z = make_rng(seed).standard_normal((n, g.mean.size))
    return g.mean[None, :] + z @ S.T


# ------------------------------------------------------------- spectral budgets


@dataclass
class SpectralErrorBudget:
    """Eigen-coordinates of a linear-Gaussian problem.

    Attributes
    ----------
    lam : eigenvalues of the normal operator (descending, ``K`` positive)
    r : eigenvalues of the fixed prior covariance in the same eigenbasis
    eps_xi : model-error components of the data in the eigenbasis
    sigma : noise scale
    lambda_star : data-adaptive prior parameter
    K : number of positive eigenvalues
    """

    lam: np.ndarray
    r: np.ndarray
    eps_xi: np.ndarray
    sigma: float
    lambda_star: float
    K: int

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=float)
        self.r = np.asarray(self.r, dtype=float)
        self.eps_xi = np.asarray(self.eps_xi, dtype=float)
        n = self.r.size
        if self.eps_xi.size != n or self.lam.size > n or self.K > self.lam.size:
            raise DimensionMismatch("inconsistent budget lengths")
        if self.lam.size < n:
            self.lam = np.r_[self.lam, np.zeros(n - self.lam.size)]


def expected_mse_da(bg: SpectralErrorBudget) -> float:
    """Closed-form expected squared error of the data-adaptive posterior mean.

    The true kernel components are drawn with variance ``lam_i``.
    """
    K = bg.K
    lam, eps = bg.lam[:K], bg.eps_xi[:K]
    s2, ls = bg.sigma ** 2, bg.lambda_star
    den = (lam + s2 * ls / lam) ** 2
    return float(np.sum((s2 * (lam + s2 * ls ** 2 / lam) + eps ** 2) / den))


def expected_mse_fixed(bg: SpectralErrorBudget) -> float:
    """Closed-form expected squared error of the fixed-prior posterior mean."""
    K = bg.K
    lam, r, eps = bg.lam[:K], bg.r[:K], bg.eps_xi[:K]
    s2 = bg.sigma ** 2
    inside = np.sum((s2 * lam + s2 ** 2 / r + eps ** 2) / (lam + s2 / r) ** 2)
    r_out, e_out = bg.r[K:], bg.eps_xi[K:]
    with np.errstate(divide="ignore", invalid="ignore"):
        blow = np.where(e_out != 0, r_out ** 2 * e_out ** 2 / s2 ** 2, 0.0)
    return float(inside + np.sum(r_out + blow))


def posterior_traces(bg: SpectralErrorBudget) -> tuple[float, float]:
    """Operator traces ``(Tr Q1_da, Tr Q1_fixed)`` of the two posteriors."""
    K = bg.K
    lam, r = bg.lam[:K], bg.r[:K]
    s2, ls = bg.sigma ** 2, bg.lambda_star
    tr_da = np.sum(s2 / (lam + s2 * ls / lam))
    tr_fixed = np.sum(s2 / (lam + s2 / r)) + np.sum(bg.r[K:])
    return float(tr_da), float(tr_fixed)
