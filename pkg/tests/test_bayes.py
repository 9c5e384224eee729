import numpy as np
import pytest

from rkhs_bayes import assembly, bayes, experiments, linalg, spectral
from mc_helpers import mc_mse

A3 = np.array([[1.0, 1, 0], [1, 2, 1], [0, 1, 1]])
B3 = np.diag([0.25, 0.5, 0.25])


def toeplitz_sys(phi, sigma, u=(1.0, 1.0)):
    L = assembly.toeplitz_stencil(u)
    return assembly.assemble_toeplitz([u], [L @ np.asarray(phi)], sigma)


def random_full(seed, n=4):
    rng = np.random.default_rng(seed)
    G, H = rng.standard_normal((2, n, n))
    return assembly.RegressionSystem(G @ G.T + 0.2 * np.eye(n), rng.standard_normal(n),
                                     H @ H.T + np.eye(n), 0.3)


class TestFixed:
    def test_zero_b(self):
        sys = assembly.RegressionSystem(A3, np.zeros(3), B3, 0.1)
        np.testing.assert_array_equal(bayes.fixed_posterior(sys).mean, 0)

    def test_toeplitz_bias(self):
        sys = toeplitz_sys([1, 1, 1], 0.1)
        m = bayes.fixed_posterior(sys).mean
        assert experiments.rel_error(m, np.ones(3), B3) == pytest.approx(0.34, abs=0.01)

    def test_diagonal(self):
        lam = np.array([3.0, 1.0, 0.1])
        b = np.array([1.0, -2.0, 0.5])
        post = bayes.fixed_posterior(assembly.RegressionSystem(np.diag(lam), b, np.eye(3), 0.2))
        np.testing.assert_allclose(post.mean, b / (lam + 0.04))
        np.testing.assert_allclose(post.cov, np.diag(0.04 / (lam + 0.04)))

    def test_toeplitz_trace(self):
        post = bayes.fixed_posterior(toeplitz_sys([1, 1, 1], 0.1))
        assert spectral.coeff_cov_operator_trace(post.cov, B3) == pytest.approx(0.34, abs=0.01)


class TestDaPrior:
    def test_toeplitz_matrices(self):
        q3 = bayes.da_prior(assembly.RegressionSystem(A3, np.zeros(3), B3), 1.0).cov
        np.testing.assert_allclose(q3, [[16, 8, 0], [8, 8, 8], [0, 8, 16]], atol=1e-12)
        A2 = 0.5 * np.diag([1.0, 2, 1])
        q2 = bayes.da_prior(assembly.RegressionSystem(A2, np.zeros(3), B3), 1.0).cov
        np.testing.assert_allclose(q2, np.diag([8.0, 4, 8]), atol=1e-12)

    def test_identity_metric(self):
        sys = random_full(0)
        sys = assembly.RegressionSystem(sys.A, sys.b, np.eye(4))
        np.testing.assert_allclose(bayes.da_prior(sys, 2.0).cov, sys.A / 2.0, atol=1e-12)


class TestDaPosterior:
    def test_in_fsoi_noiseless(self):
        post = bayes.da_posterior(toeplitz_sys([1, 1, 1], 0.1), 1e-6)
        assert experiments.rel_error(post.mean, np.ones(3), B3) < 1e-3
        tr = spectral.coeff_cov_operator_trace(post.cov, B3)
        assert tr == pytest.approx(0.01 / 8 + 0.01 / 4, rel=1e-3)

    def test_out_of_fsoi_unrecoverable_part(self):
        post = bayes.da_posterior(toeplitz_sys([1, 0, 1], 0.1), 1e-6)
        # half of psi_3 = (1,-1,1) is lost; its L2(rho) share is 1/sqrt(2)
        assert experiments.rel_error(post.mean, [1, 0, 1], B3) == pytest.approx(
            np.sqrt(0.5), abs=1e-3)

    def test_diagonal(self):
        lam = np.array([3.0, 1.0, 0.1])
        b = np.array([1.0, -2.0, 0.5])
        sys = assembly.RegressionSystem(np.diag(lam), b, np.eye(3), 0.2)
        m = bayes.da_posterior(sys, 5.0).mean
        np.testing.assert_allclose(m, lam * b / (lam ** 2 + 0.04 * 5.0), rtol=1e-10)

    @pytest.mark.parametrize("seed", range(5))
    def test_stabilized_equals_direct(self, seed):
        sys = random_full(seed)
        d1 = bayes.da_posterior(sys, 0.7)
        d2 = bayes.da_posterior_direct(sys, 0.7)
        assert np.linalg.norm(d1.cov - d2.cov) <= 1e-8 * np.linalg.norm(d2.cov)
        np.testing.assert_allclose(d1.mean, d2.mean, rtol=1e-8)

    def test_rank_deficient_supported_on_fsoi(self):
        sys = toeplitz_sys([1, 0, 1], 0.1)
        Q = bayes.da_posterior(sys, 1.0).cov
        assert np.linalg.matrix_rank(Q, tol=1e-12) <= 2
        w = np.linalg.eigvalsh(Q)
        assert w[0] >= -1e-14


class TestScaledPrior:
    sys = assembly.RegressionSystem(A3, [1.0, 0.5, 0.2], B3, 1e-3)

    def test_beta_one_independent_of_sigma(self):
        m1 = bayes.scaled_posterior_mean(self.sys, np.eye(3), 2.0, 1.0)
        m2 = bayes.scaled_posterior_mean(self.sys.with_b(self.sys.b, 1e-5), np.eye(3), 2.0, 1.0)
        np.testing.assert_allclose(m1, m2, rtol=1e-12)
        np.testing.assert_allclose(m1, np.linalg.solve(A3 + 0.5 * np.eye(3), self.sys.b))

    def test_beta_two_vanishes(self):
        norms = [np.linalg.norm(bayes.scaled_posterior_mean(self.sys.with_b(self.sys.b, s),
                                                            np.eye(3), 1.0, 2.0))
                 for s in (1e-1, 1e-3, 1e-5)]
        assert norms[2] < 1e-6 * norms[0]

    def test_beta_zero_blows_up(self):
        # b has a component along the null vector (1,-1,1) of A
        sys = self.sys.with_b(A3 @ [1.0, 0, 0] + np.array([1.0, -1, 1]) * 1e-2)
        n = [np.linalg.norm(bayes.scaled_posterior_mean(sys.with_b(sys.b, s), np.eye(3), 1, 0))
             for s in (1e-3, 1e-4)]
        assert n[1] / n[0] == pytest.approx(100, rel=0.01)


class TestSampling:
    def test_zero_cov(self):
        g = bayes.GaussianCoeff([1.0, 2.0], np.zeros((2, 2)))
        np.testing.assert_array_equal(bayes.sample_posterior(g, 5, 0), [[1, 2]] * 5)

    def test_empirical_cov(self):
        g = bayes.GaussianCoeff([0.0, 0.0], np.diag([1.0, 4.0]))
        s = bayes.sample_posterior(g, 100_000, 3)
        np.testing.assert_allclose(np.cov(s.T), np.diag([1.0, 4.0]), rtol=0.05, atol=0.05)

    def test_samples_in_range(self):
        post = bayes.da_posterior(toeplitz_sys([1, 0, 1], 0.1), 1.0)
        s = bayes.sample_posterior(post, 200, 1) - post.mean
        U = linalg.range_basis(post.cov, 1e-10)
        assert np.abs(s - s @ U @ U.T).max() < 1e-8

    def test_deterministic(self):
        g = bayes.GaussianCoeff([0.0], [[1.0]])
        np.testing.assert_array_equal(bayes.sample_posterior(g, 4, 11),
                                      bayes.sample_posterior(g, 4, 11))

    def test_json(self):
        g = bayes.GaussianCoeff([1.0], [[2.0]])
        assert bayes.GaussianCoeff.from_json(g.to_json()).cov[0, 0] == 2.0


class TestBudgets:
    def test_error_free_limit(self):
        bg = bayes.SpectralErrorBudget([8.0, 4.0], [1.0, 2.0, 0.5], [0, 0, 0], 0.0, 1.0, 2)
        assert bayes.expected_mse_fixed(bg) == pytest.approx(0.5)
        assert bayes.expected_mse_da(bg) == 0

    def test_da_below_fixed(self):
        bg = bayes.SpectralErrorBudget([8.0, 4.0], [1.0, 1.0, 1.0], [0, 0, 0], 0.1, 2.0, 2)
        assert bayes.expected_mse_da(bg) <= bayes.expected_mse_fixed(bg)

    def test_blow_up_term(self):
        mk = lambda s: bayes.SpectralErrorBudget([1.0], [1.0, 1.0], [0.0, 0.1], s, 1.0, 1)
        ratio = bayes.expected_mse_fixed(mk(1e-3)) / bayes.expected_mse_fixed(mk(1e-2))
        assert ratio == pytest.approx(1e4, rel=1e-3)

    def test_traces(self):
        bg = bayes.SpectralErrorBudget([8.0, 4.0], [1, 1, 1], [0, 0, 0], 0.1, 1e-8, 2)
        assert bayes.posterior_traces(bg)[0] == pytest.approx(0.00375, rel=1e-6)
        lam = np.array([3.0, 1.0])
        same = bayes.SpectralErrorBudget(lam, np.r_[lam, 0.0], [0, 0, 0], 0.2, 1.0, 2)
        t = bayes.posterior_traces(same)
        assert t[0] == pytest.approx(t[1])
        low = bayes.SpectralErrorBudget(lam, [1.0, 1.0, 0.0], [0, 0, 0], 0.2, 0.5, 2)
        t = bayes.posterior_traces(low)
        assert t[0] > t[1]

    def test_monte_carlo(self):
        bg = bayes.SpectralErrorBudget([2.0, 0.5], [1.0, 0.8, 0.6], [0.05, -0.02, 0.03],
                                       0.3, 0.7, 2)
        mc = mc_mse(bg, 4000, seed=2)
        for kind, closed in (("da", bayes.expected_mse_da(bg)),
                             ("fixed", bayes.expected_mse_fixed(bg))):
            mean, se = mc[kind]
            assert abs(mean - closed) < 3 * se
