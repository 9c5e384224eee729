"""Choice of the regularization strength by maximal L-curve curvature."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg, spectral
from .assembly import RegressionSystem
from .bayes import AdaptiveFactor
from .errors import DegenerateSystem


@dataclass
class LCurve:
    """Sampled L-curve ``(x(lam), y(lam))`` with its log-log curvature."""

    lambdas: np.ndarray
    x: np.ndarray
    y: np.ndarray
    kappa: np.ndarray
    lambda_star: float
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        rows = ["lambda,x,y,kappa"]
        rows += [f"{a!r},{b!r},{c!r},{d!r}" for a, b, c, d in
                 zip(self.lambdas.tolist(), self.x.tolist(), self.y.tolist(),
                     self.kappa.tolist())]
        rows.append(f"# lambda_star={self.lambda_star!r}")
        return "\n".join(rows) + "\n"


class LCurveSolver:
    """Precomputed pieces for evaluating the L-curve of a fixed (A, B) pair.

    Only the regression vector changes between replicates of an experiment,
    so the factorization, RKHS Gram matrix and grid are shared.
    """

    def __init__(self, A, B, tol: float = linalg.DEFAULT_TOL, n_grid: int = 100):
        eig = linalg.gen_eig(A, B, tol)
        lam = eig.eigvals
        if lam[0] <= tol:
            raise DegenerateSystem("degenerate system: largest eigenvalue below tolerance")
        self.A = linalg.as_sym(A)
        self.factor = AdaptiveFactor(A, B, tol)
        self.gram = spectral.rkhs_gram(A, B, tol)
        self.lam_max = float(lam[0])
        self.lam_min = float(max(lam[-1], 1e-14 * lam[0]))
        self.grid = np.geomspace(self.lam_min, self.lam_max, n_grid)

    def solve(self, b, lam):
        return self.factor.solve(b, lam)

    def curve(self, b, grid=None, loss_constant: float | None = None) -> LCurve:
        grid = self.grid if grid is None else np.asarray(grid, dtype=float)
        C = np.stack([self.factor.solve(b, lam) for lam in grid])
        E = np.einsum("ki,ij,kj->k", C, self.A, C) - 2.0 * C @ b
        y2 = np.einsum("ki,ij,kj->k", C, self.gram, C)
        if loss_constant is None:
            # shift so the smallest loss is a tiny positive number
            scale = max(np.abs(E).max(), np.finfo(float).tiny)
            x2 = E - E.min() + 1e-12 * scale
            how = "shifted"
        else:
            x2 = E + loss_constant
            how = "data"
        x = np.sqrt(np.clip(x2, np.finfo(float).tiny, None))
        y = np.sqrt(np.clip(y2, 0.0, None))
        kappa = curvature(grid, x, y)
        return LCurve(grid, x, y, kappa, _pick(grid, kappa), {"loss_constant": how})


def curvature(lambdas, x, y) -> np.ndarray:
    """Signed curvature of ``(log x, log y)`` parametrized by ``log lambda``."""
    t = np.log(lambdas)
    with np.errstate(divide="ignore", invalid="ignore"):
        lx, ly = np.log(x), np.log(y)
        x1 = np.gradient(lx, t)
        y1 = np.gradient(ly, t)
        x2 = np.gradient(x1, t)
        y2 = np.gradient(y1, t)
        k = (x1 * y2 - y1 * x2) / (x1 ** 2 + y1 ** 2) ** 1.5
    return np.where(np.isfinite(k), k, 0.0)


def _pick(lambdas, kappa) -> float:
    inner = kappa[1:-1]
    if inner.size == 0 or not inner.max() > 1e-12:
        return float(lambdas[0])
    return float(lambdas[1 + int(np.argmax(inner))])


def solve_at(sys: RegressionSystem, lam: float) -> np.ndarray:
    """Regularized coefficients ``(A + lam B pinv(A) B)^{-1} b``."""
    return AdaptiveFactor(sys.A, sys.B).solve(sys.b, lam)


def lambda_grid(sys: RegressionSystem, n_grid: int = 100, tol: float = linalg.DEFAULT_TOL):
    return LCurveSolver(sys.A, sys.B, tol, n_grid).grid


def curve_points(sys: RegressionSystem, grid=None, loss_constant: float | None = None,
                 tol: float = linalg.DEFAULT_TOL, n_grid: int = 100) -> LCurve:
    """L-curve of a regression system.

    Parameters
    ----------
    grid : array_like, optional
        Regularization values; defaults to ``n_grid`` log-spaced points between
        the extreme generalized eigenvalues of ``(A, B)``.
    loss_constant : float, optional
        Data term ``sum_k ||f^k||^2 / N`` completing the loss. When omitted,
        the loss is shifted by its minimum over the grid.
    """
    return LCurveSolver(sys.A, sys.B, tol, n_grid).curve(sys.b, grid, loss_constant)


def select_lambda(sys: RegressionSystem, n_grid: int = 100,
                  loss_constant: float | None = None,
                  tol: float = linalg.DEFAULT_TOL) -> float:
    """Regularization strength at the maximal-curvature corner of the L-curve."""
    if n_grid < 10:
        raise ValueError("n_grid must be at least 10")
    return curve_points(sys, None, loss_constant, tol, n_grid).lambda_star
