"""Kernel bases, exploration measures, datasets and the discrete forward map."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import BSpline
from scipy.stats import norm

from .errors import AllZeroData, DimensionMismatch, EmptyBasis


# --------------------------------------------------------------------------- bases


class DiracBasis:
    """Indicator basis on a finite point set (vector-valued kernels).

    Parameters
    ----------
    points : array_like
        The support points ``r_1, ..., r_l``.
    """

    kind = "Dirac"

    def __init__(self, points):
        self.points = np.asarray(points, dtype=float)

    @property
    def size(self) -> int:
        return self.points.size

    def evaluate(self, r) -> np.ndarray:
        r = np.atleast_1d(np.asarray(r, dtype=float))
        return (np.abs(r[:, None] - self.points[None, :]) < 1e-12).astype(float)


class BSplineBasis:
    """Clamped uniform B-spline basis on an interval.

    The knot vector repeats each endpoint ``degree`` extra times around a
    uniform partition, so ``n_basis = interior spans + degree``. Functions are
    zero outside the interval.

    Parameters
    ----------
    n_basis : int
        Number of basis functions ``l``.
    degree : int
        Polynomial degree (3 for cubic).
    interval : tuple of float
        Support of the basis.
    """

    kind = "BSpline"

    def __init__(self, n_basis: int = 40, degree: int = 3, interval=(-1.0, 1.0)):
        if n_basis < degree + 1:
            raise EmptyBasis(f"need at least degree+1={degree + 1} B-splines, got {n_basis}")
        self.degree = int(degree)
        self.interval = (float(interval[0]), float(interval[1]))
        a, b = self.interval
        inner = np.linspace(a, b, n_basis - degree + 1)
        self.knots = np.r_[[a] * degree, inner, [b] * degree]
        self._n = n_basis

    @property
    def size(self) -> int:
        return self._n

    @property
    def breakpoints(self) -> np.ndarray:
        return np.unique(self.knots)

    def evaluate(self, r) -> np.ndarray:
        """Design matrix of shape ``(len(r), n_basis)``."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        a, b = self.interval
        out = np.zeros((r.size, self._n))
        inside = (r >= a) & (r <= b)
        if inside.any():
            out[inside] = BSpline.design_matrix(r[inside], self.knots, self.degree).toarray()
        return out


# ------------------------------------------------------------------- measures/data


@dataclass(frozen=True)
class ExplorationMeasure:
    """Probability weights on a grid over the kernel support.

    For density-kind measures ``weights`` holds density times cell width, so
    both kinds are plain weight vectors summing to one.
    """

    points: np.ndarray
    weights: np.ndarray
    kind: str = "atomic"

    def density(self) -> np.ndarray:
        if self.kind != "density":
            return self.weights
        h = np.diff(self.points).mean()
        return self.weights / h


@dataclass
class GaussianDensity:
    """Normal probability density used as an analytic input function."""

    mean: float
    var: float

    def __call__(self, x):
        return norm.pdf(x, self.mean, np.sqrt(self.var))

    def mass(self, a, b) -> float:
        s = np.sqrt(self.var)
        return float(norm.cdf(b, self.mean, s) - norm.cdf(a, self.mean, s))


@dataclass
class DatasetPair:
    """Input/output samples ``u^k(x_j)``, ``f^k(y_l)`` on shared uniform grids."""

    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    f: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.u = np.atleast_2d(np.asarray(self.u, dtype=float))
        self.f = np.atleast_2d(np.asarray(self.f, dtype=float))
        if self.u.shape[1] != self.x.size or self.f.shape[1] != self.y.size:
            raise DimensionMismatch("grid sizes do not match the sample arrays")
        if self.u.shape[0] != self.f.shape[0]:
            raise DimensionMismatch("different numbers of inputs and outputs")

    @property
    def n_pairs(self) -> int:
        return self.u.shape[0]

    @property
    def dx(self) -> float:
        return _spacing(self.x)

    @property
    def dy(self) -> float:
        return _spacing(self.y)

    def to_json(self) -> dict:
        return {"x": self.x.tolist(), "y": self.y.tolist(),
                "u": self.u.tolist(), "f": self.f.tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> "DatasetPair":
        return cls(x=doc["x"], y=doc["y"], u=doc["u"], f=doc["f"])

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_json()))


def _spacing(grid: np.ndarray) -> float:
    if grid.size < 2:
        return 1.0
    return float(grid[1] - grid[0])


def midpoint_grid(n: int, a: float = 0.0, b: float = 1.0) -> np.ndarray:
    h = (b - a) / n
    return a + (np.arange(n) + 0.5) * h


def toeplitz_measure(us: Sequence) -> ExplorationMeasure:
    """Exploration measure of Toeplitz data on the lags ``1-n, ..., n-1``.

    ``rho(r)`` is proportional to ``sum_k sum_{i-j=r} |u^k_j|`` and normalized
    to total mass one.
    """
    U = np.atleast_2d(np.asarray(us, dtype=float))
    n = U.shape[1]
    lags = np.arange(1 - n, n)
    absU = np.abs(U).sum(axis=0)
    w = np.zeros(lags.size)
    for r_idx, r in enumerate(lags):
        # pairs (i, j) with i - j = r and 0 <= i, j < n
        j = np.arange(max(0, -r), min(n, n - r))
        w[r_idx] = absU[j].sum()
    total = w.sum()
    if total == 0:
        raise AllZeroData("all inputs are zero")
    return ExplorationMeasure(points=lags.astype(float), weights=w / total, kind="atomic")


def convolution_measure(data: DatasetPair, n_pts: int = 201, interval=(-1.0, 1.0)
                        ) -> ExplorationMeasure:
    """Exploration measure of the convolution ``int phi(y - x) u(x) dx``.

    The weight at lag ``r`` is the Riemann sum of ``|u^k(x)|`` over the inputs
    ``x`` in ``[0, 1]`` whose output ``y = x + r`` is also in ``[0, 1]``.
    """
    r = np.linspace(interval[0], interval[1], n_pts)
    h = r[1] - r[0]
    absu = np.abs(data.u).sum(axis=0)
    x = data.x
    inside = (x[None, :] >= -r[:, None]) & (x[None, :] <= 1.0 - r[:, None])
    dens = (inside * absu[None, :]).sum(axis=1) * data.dx
    w = dens * h
    total = w.sum()
    if total == 0:
        raise AllZeroData("all inputs are zero")
    return ExplorationMeasure(points=r, weights=w / total, kind="density")


def basis_matrix(basis, rho: ExplorationMeasure) -> np.ndarray:
    """Gram matrix ``B_ij = sum_r phi_i(r) phi_j(r) rho(r)``."""
    Phi = basis.evaluate(rho.points)
    B = Phi.T @ (Phi * rho.weights[:, None])
    return 0.5 * (B + B.T)


@dataclass(frozen=True)
class Pruned:
    """Result of :func:`prune_basis`; ``kept`` indexes the original basis."""

    B: np.ndarray
    A: np.ndarray
    b: np.ndarray
    kept: np.ndarray
    n_full: int

    def expand(self, c) -> np.ndarray:
        """Embed reduced coefficients back into the full basis (zeros elsewhere)."""
        c = np.asarray(c, dtype=float)
        out = np.zeros(c.shape[:-1] + (self.n_full,))
        out[..., self.kept] = c
        return out


def prune_basis(B, A, b, tol: float = 1e-12) -> Pruned:
    """Drop basis functions carrying no exploration-measure mass.

    Index ``i`` is removed when ``B_ii <= tol * max_j B_jj``.
    """
    B = np.asarray(B, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    d = np.diag(B)
    kept = np.flatnonzero(d > tol * d.max()) if d.max() > 0 else np.array([], dtype=int)
    if kept.size == 0:
        raise EmptyBasis("every basis function has zero mass under rho")
    ix = np.ix_(kept, kept)
    return Pruned(B=B[ix], A=A[ix], b=b[kept], kept=kept, n_full=B.shape[0])


def eval_forward_discrete(psi: Callable, u, x, y) -> float:
    """Riemann sum ``sum_j psi(y - x_j) u(x_j) dx``."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    dx = _spacing(x)
    return float(np.sum(psi(y - x) * u) * dx)


def forward_matrix_discrete(basis, u, x, y) -> np.ndarray:
    """Riemann forward map of every basis function, shape ``(len(y), l)``.

    Column ``i`` holds ``sum_j phi_i(y_l - x_j) u(x_j) dx``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    dx = _spacing(x)
    lag = (y[:, None] - x[None, :]).ravel()
    Phi = basis.evaluate(lag).reshape(y.size, x.size, basis.size)
    return np.einsum("ljb,j->lb", Phi, u) * dx
