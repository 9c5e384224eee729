"""Assembly of the regression system (A, b, B) from data."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import model
from .errors import DimensionMismatch, QuadratureFailure
from .linalg import as_sym

_GL_X, _GL_W = np.polynomial.legendre.leggauss(15)


@dataclass
class RegressionSystem:
    """Normal equations of the kernel regression in coefficient space.

    Attributes
    ----------
    A : ndarray
        Regression matrix, symmetric PSD.
    b : ndarray
        Regression vector.
    B : ndarray
        Basis Gram matrix in the exploration-measure inner product.
    sigma : float
        Observation noise scale.
    meta : dict
        Provenance (assembly mode, number of pairs, grids, ...).
    """

    A: np.ndarray
    b: np.ndarray
    B: np.ndarray
    sigma: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.A = as_sym(self.A, "A")
        self.B = as_sym(self.B, "B")
        self.b = np.asarray(self.b, dtype=float).ravel()
        if not (self.A.shape == self.B.shape and self.b.size == self.A.shape[0]):
            raise DimensionMismatch(
                f"inconsistent shapes A{self.A.shape} B{self.B.shape} b({self.b.size},)"
            )
        self.sigma = float(self.sigma)

    @property
    def size(self) -> int:
        return self.b.size

    def with_b(self, b, sigma=None) -> "RegressionSystem":
        s = self.sigma if sigma is None else sigma
        return RegressionSystem(self.A, b, self.B, s, dict(self.meta))

    def pruned(self, tol: float = 1e-12):
        """Return ``(system, Pruned)`` with massless basis functions removed."""
        p = model.prune_basis(self.B, self.A, self.b, tol)
        meta = dict(self.meta, kept=p.kept.tolist(), n_full=p.n_full)
        return RegressionSystem(p.A, p.b, p.B, self.sigma, meta), p

    def to_json(self) -> dict:
        return {"A": self.A.tolist(), "b": self.b.tolist(), "B": self.B.tolist(),
                "sigma": self.sigma, "meta": self.meta}

    @classmethod
    def from_json(cls, doc: dict) -> "RegressionSystem":
        return cls(A=doc["A"], b=doc["b"], B=doc["B"], sigma=doc.get("sigma", 0.0),
                   meta=doc.get("meta", {}))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path) -> "RegressionSystem":
        return cls.from_json(json.loads(Path(path).read_text()))


def _ordered_sum(terms):
    # pairwise tree reduction in a fixed order
    terms = list(terms)
    while len(terms) > 1:
        nxt = [terms[i] + terms[i + 1] for i in range(0, len(terms) - 1, 2)]
        if len(terms) % 2:
            nxt.append(terms[-1])
        terms = nxt
    return terms[0]


# ------------------------------------------------------------------------ Toeplitz


def toeplitz_stencil(u) -> np.ndarray:
    """Matrix ``L_u`` with ``(L_u phi)_i = sum_r phi(r) u_{i-r}``.

    Columns are ordered by lag ``r = 1-n, ..., n-1``; for ``n = 2`` this gives
    ``[[u1, u0, 0], [0, u1, u0]]``.
    """
    u = np.asarray(u, dtype=float).ravel()
    n = u.size
    L = np.zeros((n, 2 * n - 1))
    for i in range(n):
        for col in range(2 * n - 1):
            j = i - (col - (n - 1))
            if 0 <= j < n:
                L[i, col] = u[j]
    return L


def assemble_toeplitz(us: Sequence, fs: Sequence, sigma: float = 0.0) -> RegressionSystem:
    """Regression system of the Toeplitz problem ``L_{u^k} phi = f^k``.

    Uses the Euclidean inner product on outputs and the Dirac basis on the
    lags, so ``B = diag(rho)``. No pruning is applied here.
    """
    U = np.atleast_2d(np.asarray(us, dtype=float))
    F = np.atleast_2d(np.asarray(fs, dtype=float))
    if U.shape != F.shape:
        raise DimensionMismatch(f"inputs {U.shape} and outputs {F.shape} differ")
    N = U.shape[0]
    Ls = [toeplitz_stencil(u) for u in U]
    A = _ordered_sum(L.T @ L for L in Ls) / N
    b = _ordered_sum(L.T @ f for L, f in zip(Ls, F)) / N
    rho = model.toeplitz_measure(U)
    return RegressionSystem(A, b, np.diag(rho.weights), sigma,
                            {"mode": "toeplitz", "N": N, "n": U.shape[1]})


# --------------------------------------------------------------------- convolution


def normal_equations(R_list, F, dy: float):
    """``A = (1/N) sum R^T R dy`` and ``b = (1/N) sum R^T f dy``."""
    N = len(R_list)
    A = _ordered_sum(R.T @ R for R in R_list) * (dy / N)
    b = _ordered_sum(R.T @ f for R, f in zip(R_list, F)) * (dy / N)
    return A, b


def assemble_discrete(data: model.DatasetPair, basis, sigma: float = 0.0,
                      rho: model.ExplorationMeasure | None = None,
                      forward=None) -> RegressionSystem:
    """Regression system with both A and b from the Riemann forward map.

    ``forward`` may pass precomputed Riemann forward matrices (one per input).
    """
    if rho is None:
        rho = model.convolution_measure(data)
    if forward is None:
        forward = [model.forward_matrix_discrete(basis, u, data.x, data.y) for u in data.u]
    A, b = normal_equations(forward, data.f, data.dy)
    B = model.basis_matrix(basis, rho)
    return RegressionSystem(A, b, B, sigma, {"mode": "discrete", "N": data.n_pairs,
                                             "J": data.x.size, "L": data.y.size,
                                             "l": basis.size})


def _gl_panels(func, a, b):
    """15-point Gauss-Legendre on each panel; ``func(x)`` returns ``(m, l)``."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    xs = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    vals = func(xs).reshape(a.size, _GL_X.size, -1)
    return np.einsum("pqk,q,p->pk", vals, _GL_W, half)


def forward_matrix_quadrature(basis, density: Callable, y, quad_tol: float = 1e-10,
                              support=(0.0, 1.0), max_depth: int = 30) -> np.ndarray:
    """Forward map ``int_support phi_i(y - x) u(x) dx`` by adaptive quadrature.

    Each integral is split at the kernel breakpoints (where the integrand is
    not smooth) and every panel is bisected until the 15-point Gauss-Legendre
    estimate changes by less than ``quad_tol``.

    Raises
    ------
    QuadratureFailure
        If a panel still misses the tolerance after ``max_depth`` bisections.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    lo, hi = support
    brk = getattr(basis, "breakpoints", np.array([]))
    out = np.zeros((y.size, basis.size))
    for idx, yy in enumerate(y):
        def integrand(x, yy=yy):
            return basis.evaluate(yy - x) * density(x)[:, None]

        pts = np.unique(np.clip(np.r_[lo, hi, yy - brk], lo, hi))
        a, b = pts[:-1], pts[1:]
        keep = b - a > 1e-15
        a, b = a[keep], b[keep]
        coarse = _gl_panels(integrand, a, b)
        total = np.zeros(basis.size)
        for _ in range(max_depth):
            m = 0.5 * (a + b)
            fine_l = _gl_panels(integrand, a, m)
            fine_r = _gl_panels(integrand, m, b)
            fine = fine_l + fine_r
            ok = np.abs(fine - coarse).max(axis=1) < quad_tol
            total += fine[ok].sum(axis=0)
            if ok.all():
                break
            bad = ~ok
            a = np.r_[a[bad], m[bad]]
            b = np.r_[m[bad], b[bad]]
            coarse = np.r_[fine_l[bad], fine_r[bad]]
        else:
            raise QuadratureFailure(f"quadrature did not reach tol {quad_tol} at y={yy}")
        out[idx] = total
    return out


def assemble_continuous(data: model.DatasetPair, basis, densities: Sequence[Callable],
                        quad_tol: float = 1e-10, sigma: float = 0.0,
                        rho: model.ExplorationMeasure | None = None,
                        forward_riemann=None, forward_quad=None) -> RegressionSystem:
    """Regression system with A from quadrature and b from the Riemann sums.

    The mismatch between the two routes is deliberate: it models a regression
    matrix computed more accurately than the data-driven regression vector.
    """
    if len(densities) != data.n_pairs:
        raise DimensionMismatch("need one analytic density per input")
    if rho is None:
        rho = model.convolution_measure(data)
    if forward_quad is None:
        forward_quad = [forward_matrix_quadrature(basis, d, data.y, quad_tol) for d in densities]
    if forward_riemann is None:
        forward_riemann = [model.forward_matrix_discrete(basis, u, data.x, data.y)
                           for u in data.u]
    A, _ = normal_equations(forward_quad, data.f, data.dy)
    _, b = normal_equations(forward_riemann, data.f, data.dy)
    B = model.basis_matrix(basis, rho)
    return RegressionSystem(A, b, B, sigma, {"mode": "continuous", "N": data.n_pairs,
                                             "J": data.x.size, "L": data.y.size,
                                             "l": basis.size, "quad_tol": quad_tol})
