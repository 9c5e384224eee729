"""Monte Carlo check of the expected-MSE closed forms on a small system."""
import numpy as np

from rkhs_bayes import assembly, bayes


def eigen_system(lam, seed=0):
    """Random PD metric B and B-orthonormal V with A = B V diag(lam) V^T B."""
    rng = np.random.default_rng(seed)
    n = len(lam)
    G = rng.standard_normal((n, n))
    B = G @ G.T / n + 0.5 * np.eye(n)
    Qo, _ = np.linalg.qr(rng.standard_normal((n, n)))
    V = np.linalg.solve(np.linalg.cholesky(B).T, Qo)
    BV = B @ V
    return B @ V @ np.diag(lam) @ V.T @ B, B, V, BV


def mc_mse(budget: bayes.SpectralErrorBudget, n_samples=10_000, seed=0):
    """Empirical mean and standard error of both posterior-mean errors.

    For the adaptive prior the true components are drawn with variance
    ``lam_i``; for the fixed prior with variance ``r_i``.
    """
    lam = budget.lam
    A, B, V, BV = eigen_system(lam, seed)
    s = budget.sigma
    rng = np.random.default_rng(seed + 1)
    Q0 = V @ np.diag(budget.r) @ V.T
    base = assembly.RegressionSystem(A, np.zeros(lam.size), B, s)
    factor = bayes.AdaptiveFactor(A, B)
    out = {}
    for kind in ("da", "fixed"):
        var = lam if kind == "da" else budget.r
        errs = np.empty(n_samples)
        for k in range(n_samples):
            phi = np.sqrt(var) * rng.standard_normal(lam.size)
            noise = s * np.sqrt(lam) * rng.standard_normal(lam.size)
            b = BV @ (lam * phi + noise + budget.eps_xi)
            sys = base.with_b(b)
            if kind == "da":
                m = bayes.da_posterior(sys, budget.lambda_star, factor).mean
            else:
                m = bayes.gaussian_posterior_mean(sys, Q0)
            e = m - V @ phi
            errs[k] = e @ B @ e
        out[kind] = (errs.mean(), errs.std(ddof=1) / np.sqrt(n_samples))
    return out
