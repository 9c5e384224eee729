"""Synthetic kernel-learning problems and error scenarios."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import assembly, model, spectral
from .bayes import make_rng
from .errors import ConfigError, InsufficientRank

SCENARIOS = ("discretization", "partial", "model-error", "wrong-noise")
MODES = ("discrete", "continuous")
PLACEMENTS = ("in", "out")


@dataclass(frozen=True)
class ErrorScenario:
    """One of the four data/computation error types.

    Attributes
    ----------
    kind : {"discretization", "partial", "model-error", "wrong-noise"}
    sigma_xi : float
        Model-error amplitude; nonzero only for ``"model-error"``.
    missing_fraction : float
        Leading fraction of output points zeroed for ``"partial"``.
    assembly_mode : {"discrete", "continuous"}
        How the regression matrix is integrated.
    """

    kind: str
    sigma_xi: float = 0.0
    missing_fraction: float = 0.0
    assembly_mode: str = "discrete"

    def __post_init__(self):
        if self.kind not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.kind!r}; choose from {SCENARIOS}")
        if self.assembly_mode not in MODES:
            raise ConfigError(f"unknown assembly mode {self.assembly_mode!r}")
        if (self.kind == "model-error") != (self.sigma_xi > 0):
            raise ConfigError("sigma_xi must be positive exactly for the model-error scenario")
        if (self.kind == "partial") != (self.missing_fraction > 0):
            raise ConfigError("missing_fraction must be positive exactly for partial observation")

    @classmethod
    def make(cls, kind: str, mode: str = "discrete", sigma_xi: float = 0.01,
             missing_fraction: float = 0.25) -> "ErrorScenario":
        return cls(kind,
                   sigma_xi if kind == "model-error" else 0.0,
                   missing_fraction if kind == "partial" else 0.0,
                   mode)


@dataclass(frozen=True)
class TrueKernelSpec:
    """Sampling law of the true kernel: inside or outside the identifiable space."""

    placement: str = "out"
    n_modes: int = 3

    def __post_init__(self):
        if self.placement not in PLACEMENTS:
            raise ConfigError(f"placement must be 'in' or 'out', got {self.placement!r}")


def sample_true_kernel(spec: TrueKernelSpec, fsoi: spectral.Fsoi, n_basis: int,
                       seed=0) -> np.ndarray:
    """Coefficients of a random true kernel in the original basis.

    ``"out"`` draws ``c ~ N(0, I_l)``; ``"in"`` combines the leading
    ``n_modes`` eigenvectors with standard normal weights.
    """
    rng = make_rng(seed)
    if spec.placement == "out":
        return rng.standard_normal(n_basis)
    if fsoi.K < spec.n_modes:
        raise InsufficientRank(f"identifiable dimension {fsoi.K} < {spec.n_modes} modes")
    z = rng.standard_normal(spec.n_modes)
    return fsoi.eigvecs[:, : spec.n_modes] @ z


# ------------------------------------------------------------------------ Toeplitz


def gen_toeplitz_dataset(us, phi_true, sigma: float, seed=0, model_error: float = 0.0):
    """Outputs ``f^k = L_{u^k} phi + eta^k (+ model_error * u|u|^2)``."""
    rng = make_rng(seed)
    U = np.atleast_2d(np.asarray(us, dtype=float))
    phi = np.asarray(phi_true, dtype=float)
    if phi.size != 2 * U.shape[1] - 1:
        raise ConfigError("phi_true must have 2n-1 entries")
    F = np.stack([assembly.toeplitz_stencil(u) @ phi for u in U])
    F = F + sigma * rng.standard_normal(F.shape)
    if model_error:
        F = F + model_error * U * np.abs(U) ** 2
    return U, F


# --------------------------------------------------------------------- convolution


@dataclass(frozen=True)
class ConvolutionSetup:
    """Configuration of the convolution example.

    Inputs are normal densities on a midpoint grid of ``[0, 1]``; outputs are
    observed on a coarser midpoint grid.
    """

    n_x: int = 100
    n_y: int = 50
    means: tuple = (-1.0, -0.4, 0.2)
    var: float = 1.0 / 15.0
    n_basis: int = 40
    degree: int = 3
    n_rho: int = 201
    quad_tol: float = 1e-10
    prune_tol: float = 1e-12


@dataclass
class ConvolutionProblem:
    """Everything about the convolution example that does not depend on noise."""

    setup: ConvolutionSetup
    x: np.ndarray
    y: np.ndarray
    densities: list
    u: np.ndarray
    u_y: np.ndarray
    basis: model.BSplineBasis
    rho: model.ExplorationMeasure
    B: np.ndarray
    R_riemann: list
    R_quad: list
    A_D: np.ndarray
    A_C: np.ndarray
    kept: np.ndarray
    _fsoi: dict = field(default_factory=dict)

    @property
    def dy(self) -> float:
        return float(self.y[1] - self.y[0])

    def A(self, mode: str) -> np.ndarray:
        return self.A_D if mode == "discrete" else self.A_C

    def B_kept(self) -> np.ndarray:
        return self.B[np.ix_(self.kept, self.kept)]

    def restrict(self, M):
        M = np.asarray(M)
        if M.ndim == 1:
            return M[self.kept]
        return M[np.ix_(self.kept, self.kept)]

    def fsoi(self, mode: str = "discrete", tol: float = 1e-12) -> spectral.Fsoi:
        key = (mode, tol)
        if key not in self._fsoi:
            self._fsoi[key] = spectral.decompose(self.restrict(self.A(mode)),
                                                 self.B_kept(), tol)
        return self._fsoi[key]

    def regression_vector(self, F) -> np.ndarray:
        """Riemann-sum regression vector of the observed outputs."""
        _, b = assembly.normal_equations(self.R_riemann, F, self.dy)
        return b

    def system(self, mode: str, F, sigma: float) -> assembly.RegressionSystem:
        """Pruned regression system for observations ``F``."""
        b = self.regression_vector(F)
        return assembly.RegressionSystem(
            self.restrict(self.A(mode)), b[self.kept], self.B_kept(), sigma,
            {"mode": mode, "N": len(self.densities), "l": self.basis.size,
             "kept": self.kept.tolist()})

    def dataset(self, F) -> model.DatasetPair:
        return model.DatasetPair(self.x, self.y, self.u, F)


@lru_cache(maxsize=8)
def build_convolution_problem(setup: ConvolutionSetup = ConvolutionSetup()) -> ConvolutionProblem:
    """Assemble grids, measure, Gram matrix and both regression matrices."""
    x = model.midpoint_grid(setup.n_x)
    y = model.midpoint_grid(setup.n_y)
    dens = [model.GaussianDensity(m, setup.var) for m in setup.means]
    u = np.stack([d(x) for d in dens])
    u_y = np.stack([d(y) for d in dens])
    basis = model.BSplineBasis(setup.n_basis, setup.degree)
    data = model.DatasetPair(x, y, u, np.zeros((len(dens), y.size)))
    rho = model.convolution_measure(data, setup.n_rho)
    B = model.basis_matrix(basis, rho)
    Rr = [model.forward_matrix_discrete(basis, uk, x, y) for uk in u]
    Rq = [assembly.forward_matrix_quadrature(basis, d, y, setup.quad_tol) for d in dens]
    dy = float(y[1] - y[0])
    A_D, _ = assembly.normal_equations(Rr, data.f, dy)
    A_C, _ = assembly.normal_equations(Rq, data.f, dy)
    kept = model.prune_basis(B, A_D, np.zeros(basis.size), setup.prune_tol).kept
    return ConvolutionProblem(setup, x, y, dens, u, u_y, basis, rho, B, Rr, Rq,
                              A_D, A_C, kept)


def gen_convolution_dataset(problem: ConvolutionProblem, scenario: ErrorScenario,
                            phi_true, sigma_eta: float, seed=0) -> model.DatasetPair:
    """Noisy outputs of the convolution with kernel coefficients ``phi_true``.

    The clean signal uses the quadrature forward map. Noise per output point
    has variance ``sigma_eta**2 / dy`` (Gaussian, or uniform for the
    wrong-noise scenario).
    """
    rng = make_rng(seed)
    c = np.asarray(phi_true, dtype=float)
    F = np.stack([R @ c for R in problem.R_quad])
    scale = sigma_eta / np.sqrt(problem.dy)
    if scenario.kind == "wrong-noise":
        F = F + rng.uniform(-np.sqrt(3.0) * scale, np.sqrt(3.0) * scale, F.shape)
    else:
        F = F + scale * rng.standard_normal(F.shape)
    if scenario.kind == "model-error":
        F = F + scenario.sigma_xi * problem.u_y * np.abs(problem.u_y)
    if scenario.kind == "partial":
        F[:, : int(np.floor(scenario.missing_fraction * F.shape[1]))] = 0.0
    return problem.dataset(F)
