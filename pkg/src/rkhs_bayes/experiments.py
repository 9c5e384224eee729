"""Numerical studies: noise sweeps, Toeplitz reports, posterior bands, rates."""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import assembly, bayes, lcurve, linalg, spectral, synth
from .bayes import make_rng
from .errors import ConfigError

DEFAULT_SIGMAS = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5)
METHODS = ("fixed", "da")


def rel_error(est, truth, B) -> float:
    """Relative error in the exploration-measure norm, ``||e||_B / ||truth||_B``."""
    e = np.asarray(est) - np.asarray(truth)
    return float(np.sqrt(max(e @ B @ e, 0.0)) / np.sqrt(truth @ B @ truth))


def _map_ordered(fn, items, threads):
    items = list(items)
    if threads is None:
        threads = os.cpu_count() or 1
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _fmt(v) -> str:
    return repr(float(v))


# ----------------------------------------------------------------------- sweeps


@dataclass
class SweepResult:
    """Relative errors of both posterior means over replicates and noise levels.

    ``errors[method]`` and ``lambda_star`` have shape ``(n_sigma, n_reps)``;
    ``lambda_star`` holds the L-curve regularization strength of each fit.
    """

    sigmas: np.ndarray
    errors: dict
    lambda_star: np.ndarray
    n_reps: int
    seed: int
    config: dict = field(default_factory=dict)

    def quantiles(self, method: str) -> np.ndarray:
        """``(n_sigma, 3)`` array of 25th, 50th and 75th percentiles."""
        return np.percentile(self.errors[method], [25, 50, 75], axis=1).T

    def median(self, method: str) -> np.ndarray:
        return self.quantiles(method)[:, 1]

    def to_csv(self) -> str:
        head = " ".join(f"{k}={v}" for k, v in self.config.items())
        rows = [f"# n_reps={self.n_reps} seed={self.seed} {head}".rstrip(),
                "sigma,method,q25,q50,q75"]
        for i, s in enumerate(self.sigmas):
            for m in METHODS:
                q = self.quantiles(m)[i]
                rows.append(",".join([_fmt(s), m] + [_fmt(v) for v in q]))
        return "\n".join(rows) + "\n"

    def filename(self) -> str:
        c = self.config
        return f"sweep_{c['scenario']}_{c['mode']}_{c['placement']}.csv"


@dataclass
class _PanelContext:
    problem: synth.ConvolutionProblem
    scenario: synth.ErrorScenario
    placement: synth.TrueKernelSpec
    sigmas: np.ndarray
    solver: lcurve.LCurveSolver
    A_eig: tuple
    B_full: np.ndarray
    fsoi: spectral.Fsoi
    dump_dir: Path | None


def _replicate(ctx: _PanelContext, rep: int, ss: np.random.SeedSequence):
    prob = ctx.problem
    kids = ss.spawn(1 + ctx.sigmas.size)
    c = synth.sample_true_kernel(ctx.placement, ctx.fsoi, prob.basis.size, kids[0])
    if ctx.placement.placement == "in":
        full = np.zeros(prob.basis.size)
        full[prob.kept] = c
        c = full
    w, U = ctx.A_eig
    errs = np.zeros((2, ctx.sigmas.size))
    lams = np.zeros(ctx.sigmas.size)
    for i, s in enumerate(ctx.sigmas):
        data = synth.gen_convolution_dataset(prob, ctx.scenario, c, s, kids[i + 1])
        if ctx.dump_dir is not None:
            data.save(ctx.dump_dir / f"data_s{i}_r{rep}.json")
        b = prob.regression_vector(data.f)[prob.kept]
        m_fixed = U @ ((U.T @ b) / (w + s * s))
        lam = ctx.solver.curve(b).lambda_star
        m_da = ctx.solver.solve(b, lam)
        for j, m in enumerate((m_fixed, m_da)):
            est = np.zeros(prob.basis.size)
            est[prob.kept] = m
            errs[j, i] = rel_error(est, c, ctx.B_full)
        lams[i] = lam
    return errs, lams


def run_noise_sweep(scenario: synth.ErrorScenario, placement: str = "out",
                    sigmas=DEFAULT_SIGMAS, n_reps: int = 200, seed: int = 0,
                    problem: synth.ConvolutionProblem | None = None,
                    setup: synth.ConvolutionSetup | None = None,
                    threads: int | None = None, tol: float = linalg.DEFAULT_TOL,
                    n_grid: int = 100, dump_dir=None) -> SweepResult:
    """Errors of the fixed and data-adaptive posterior means across noise levels.

    The regression matrix is assembled once; each replicate draws a true
    kernel and, for every noise level, fresh noisy observations. The
    data-adaptive estimate uses the L-curve regularization of that replicate.
    """
    if n_reps < 1:
        raise ConfigError("n_reps must be at least 1")
    if problem is None:
        problem = synth.build_convolution_problem(setup or synth.ConvolutionSetup())
    spec = synth.TrueKernelSpec(placement)
    sig = np.asarray(sigmas, dtype=float)
    if sig.size == 0 or np.any(sig <= 0):
        raise ConfigError("noise levels must be positive")
    A = problem.restrict(problem.A(scenario.assembly_mode))
    w, U = np.linalg.eigh(A)
    dump = None
    if dump_dir is not None:
        dump = Path(dump_dir)
        dump.mkdir(parents=True, exist_ok=True)
    ctx = _PanelContext(problem, scenario, spec, sig,
                        lcurve.LCurveSolver(A, problem.B_kept(), tol, n_grid),
                        (w, U), problem.B, problem.fsoi("discrete", tol), dump)
    children = np.random.SeedSequence(seed).spawn(n_reps)
    out = _map_ordered(lambda k: _replicate(ctx, k, children[k]), range(n_reps), threads)
    errs = np.stack([o[0] for o in out], axis=-1)
    lams = np.stack([o[1] for o in out], axis=-1)
    cfg = {"scenario": scenario.kind, "mode": scenario.assembly_mode,
           "placement": placement, "n_basis": problem.basis.size}
    return SweepResult(sig, {"fixed": errs[0], "da": errs[1]}, lams, n_reps, seed, cfg)


# ------------------------------------------------------------- toeplitz


TOEPLITZ_KERNELS = {"(1,1,1)": (1.0, 1.0, 1.0), "(1,0,1)": (1.0, 0.0, 1.0)}


@dataclass
class PriorComparison:
    """Mean and standard deviation of biases and posterior traces per true kernel."""

    rows: dict
    n_reps: int
    sigma: float
    seed: int

    def to_json(self) -> dict:
        return {"n_reps": self.n_reps, "sigma": self.sigma, "seed": self.seed,
                "cases": self.rows}


def toeplitz_prior_comparison(n_reps: int = 100, sigma: float = 0.1, seed: int = 0,
                              u=(1.0, 1.0), n_grid: int = 100) -> PriorComparison:
    """Compare both priors on repeated noisy Toeplitz datasets for ``n = 2``."""
    us = np.atleast_2d(u)
    rows = {}
    for ci, (name, phi) in enumerate(TOEPLITZ_KERNELS.items()):
        phi = np.asarray(phi)
        children = np.random.SeedSequence([seed, ci]).spawn(n_reps)
        rec = {k: [] for k in ("bias_fixed", "bias_da", "trace_fixed", "trace_da",
                               "lambda")}
        for ss in children:
            _, F = synth.gen_toeplitz_dataset(us, phi, sigma, ss)
            sys, pr = assembly.assemble_toeplitz(us, F, sigma).pruned()
            truth = phi[pr.kept]
            post_f = bayes.fixed_posterior(sys)
            lam = lcurve.select_lambda(sys, n_grid)
            post_d = bayes.da_posterior(sys, lam / sigma ** 2)
            rec["bias_fixed"].append(rel_error(post_f.mean, truth, sys.B))
            rec["bias_da"].append(rel_error(post_d.mean, truth, sys.B))
            rec["trace_fixed"].append(spectral.coeff_cov_operator_trace(post_f.cov, sys.B))
            rec["trace_da"].append(spectral.coeff_cov_operator_trace(post_d.cov, sys.B))
            rec["lambda"].append(lam)
        rows[name] = {}
        for k, v in rec.items():
            rows[name][k + "_mean"] = float(np.mean(v))
            rows[name][k + "_std"] = float(np.std(v))
    return PriorComparison(rows, n_reps, sigma, seed)


TOEPLITZ_DATASETS = (((1.0, 0.0),), ((1.0, 0.0), (0.0, 1.0)), ((1.0, 1.0),))


def toeplitz_spectra(tol: float = linalg.DEFAULT_TOL) -> list:
    """Exploration measure, identifiable dimension and spectrum of the three
    Toeplitz datasets ``{(1,0)}``, ``{(1,0), (0,1)}`` and ``{(1,1)}``."""
    out = []
    for us in TOEPLITZ_DATASETS:
        full = assembly.assemble_toeplitz(us, np.zeros((len(us), 2)))
        sys, pr = full.pruned(tol)
        fs = spectral.decompose(sys.A, sys.B, tol)
        out.append({"data": [list(u) for u in us],
                    "rho": np.diag(full.B).tolist(),
                    "kept": pr.kept.tolist(),
                    "eigvals": fs.eigvals.tolist(),
                    "K": fs.K,
                    "eigvecs": pr.expand(fs.eigvecs.T).T.tolist()})
    return out


# ------------------------------------------------------------------------ bands


@dataclass
class BandSummary:
    """Pointwise posterior summaries of the kernel on the measure grid."""

    r: np.ndarray
    columns: dict
    config: dict = field(default_factory=dict)

    COLS = ("phi_true", "map_fixed", "map_da", "q25_fixed", "q75_fixed", "q25_da", "q75_da")

    def to_csv(self) -> str:
        rows = ["r," + ",".join(self.COLS)]
        for i, r in enumerate(self.r):
            rows.append(",".join([_fmt(r)] + [_fmt(self.columns[c][i]) for c in self.COLS]))
        return "\n".join(rows) + "\n"


def run_posterior_bands(scenario: synth.ErrorScenario, placement: str = "out",
                        sigma: float = 1e-3, n_samples: int = 1000, seed: int = 0,
                        problem: synth.ConvolutionProblem | None = None,
                        tol: float = linalg.DEFAULT_TOL) -> BandSummary:
    """Posterior means and 25-75% bands of both priors for one replicate."""
    if problem is None:
        problem = synth.build_convolution_problem()
    ss = np.random.SeedSequence(seed).spawn(4)
    spec = synth.TrueKernelSpec(placement)
    c = synth.sample_true_kernel(spec, problem.fsoi("discrete", tol), problem.basis.size, ss[0])
    if placement == "in":
        full = np.zeros(problem.basis.size)
        full[problem.kept] = c
        c = full
    data = synth.gen_convolution_dataset(problem, scenario, c, sigma, ss[1])
    sys = problem.system(scenario.assembly_mode, data.f, sigma)
    solver = lcurve.LCurveSolver(sys.A, sys.B, tol)
    lam = solver.curve(sys.b).lambda_star
    posts = {"fixed": bayes.fixed_posterior(sys),
             "da": bayes.da_posterior(sys, lam / sigma ** 2, solver.factor)}
    r = problem.rho.points
    Phi = problem.basis.evaluate(r)[:, problem.kept]
    cols = {"phi_true": problem.basis.evaluate(r) @ c}
    for k, (name, post) in enumerate(posts.items()):
        draws = bayes.sample_posterior(post, n_samples, ss[2 + k]) @ Phi.T
        cols[f"map_{name}"] = Phi @ post.mean
        cols[f"q25_{name}"] = np.percentile(draws, 25, axis=0)
        cols[f"q75_{name}"] = np.percentile(draws, 75, axis=0)
    cfg = {"scenario": scenario.kind, "mode": scenario.assembly_mode, "placement": placement,
           "sigma": sigma, "lambda": lam, "n_samples": n_samples, "seed": seed}
    return BandSummary(r, cols, cfg)


# ---------------------------------------------------------------- divergence


@dataclass
class DivergenceSystem:
    """Small system with known eigenstructure and a null-space data error."""

    sys: assembly.RegressionSystem
    V: np.ndarray
    lam: np.ndarray
    phi: np.ndarray
    eps: np.ndarray
    K: int

    def at_sigma(self, sigma):
        return self.sys.with_b(self.sys.b, sigma)

    def da_limit(self) -> np.ndarray:
        """Small-noise limit ``sum_{i<=K} (phi_i + eps_i / lam_i) psi_i``."""
        K = self.K
        return self.V[:, :K] @ (self.phi[:K] + self.eps[:K] / self.lam[:K])


def divergence_system(seed=0, n: int = 4, K: int = 2, eps_in: float = 0.05,
                      eps_out: float = 0.1) -> DivergenceSystem:
    """Random rank-``K`` system whose regression vector has a null-space part."""
    rng = make_rng(seed)
    G = rng.standard_normal((n, n))
    B = G @ G.T / n + 0.5 * np.eye(n)
    L = np.linalg.cholesky(B)
    Qo, _ = np.linalg.qr(rng.standard_normal((n, n)))
    V = np.linalg.solve(L.T, Qo)  # V^T B V = I
    lam = np.r_[np.sort(rng.uniform(0.5, 2.0, K))[::-1], np.zeros(n - K)]
    phi = rng.standard_normal(n)
    eps = np.r_[eps_in * rng.standard_normal(K), eps_out * rng.standard_normal(n - K)]
    BV = B @ V
    A = BV @ np.diag(lam) @ BV.T
    b = BV @ (lam * phi + eps)
    return DivergenceSystem(assembly.RegressionSystem(A, b, B, 1.0), V, lam, phi, eps, K)


def loglog_slope(sigmas, values, n_last: int = 3) -> float:
    """Least-squares slope of ``log values`` against ``log sigmas`` over the
    ``n_last`` smallest noise levels."""
    s = np.asarray(sigmas, dtype=float)
    v = np.asarray(values, dtype=float)
    idx = np.argsort(s)[:n_last]
    return float(np.polyfit(np.log(s[idx]), np.log(v[idx]), 1)[0])


def run_divergence_rates(betas=(0.0, 0.5, 1.0, 2.0), C0: float = 1.0, seed: int = 0,
                         sigmas=DEFAULT_SIGMAS, lambda_star: float = 1.0,
                         n_fit: int = 3) -> dict:
    """Growth rates of posterior means as the noise vanishes.

    For each ``beta`` the prior ``N(0, C0 s^{2 beta} I)`` is used and the
    slope of ``log ||m||`` is fitted; the data-adaptive row records the
    distance to its small-noise limit.
    """
    ds = divergence_system(seed)
    sig = np.asarray(sigmas, dtype=float)
    Q0 = np.eye(ds.sys.size)
    rows = []
    for beta in betas:
        norms = [np.linalg.norm(bayes.scaled_posterior_mean(ds.at_sigma(s), Q0, C0, beta))
                 for s in sig]
        rows.append({"method": "scaled", "beta": float(beta), "values": norms,
                     "slope": loglog_slope(sig, norms, n_fit)})
    limit = ds.da_limit()
    factor = bayes.AdaptiveFactor(ds.sys.A, ds.sys.B)
    dist = [np.linalg.norm(bayes.da_posterior(ds.at_sigma(s), lambda_star, factor).mean - limit)
            for s in sig]
    rows.append({"method": "da", "beta": float("nan"), "values": dist,
                 "slope": loglog_slope(sig, dist, n_fit)})
    beta1 = np.linalg.solve(ds.sys.A + np.linalg.inv(Q0) / C0, ds.sys.b)
    return {"sigmas": sig.tolist(), "rows": rows, "beta1_limit": beta1.tolist(),
            "C0": C0, "seed": seed}


def divergence_csv(table: dict) -> str:
    lines = ["method,beta,sigma,value,slope"]
    for row in table["rows"]:
        for s, v in zip(table["sigmas"], row["values"]):
            lines.append(",".join([row["method"], _fmt(row["beta"]), _fmt(s), _fmt(v),
                                   _fmt(row["slope"])]))
    return "\n".join(lines) + "\n"


def write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2))
