import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rkhs_bayes import linalg
from rkhs_bayes.errors import DimensionMismatch, IndefiniteMatrix, NonSymmetric, NotPositiveDefinite

A3 = np.array([[1.0, 1, 0], [1, 2, 1], [0, 1, 1]])
B3 = np.diag([0.25, 0.5, 0.25])


def random_spd(rng, n, cond=10.0):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    w = np.geomspace(1.0, 1.0 / cond, n)
    return (Q * w) @ Q.T


def random_psd(rng, n, rank):
    G = rng.standard_normal((n, rank))
    return G @ G.T


class TestGenEig:
    def test_toeplitz_case(self):
        ge = linalg.gen_eig(A3, B3)
        np.testing.assert_allclose(ge.eigvals, [8, 4, 0], atol=1e-12)
        s2 = np.sqrt(2)
        expected = np.array([[1, 1, 1], [-s2, 0, s2], [1, -1, 1]]).T
        # sign convention puts the first significant entry positive
        expected[:, 1] *= -1
        np.testing.assert_allclose(ge.eigvecs, expected, atol=1e-12)

    def test_identity(self):
        ge = linalg.gen_eig(np.eye(3), np.eye(3))
        np.testing.assert_allclose(ge.eigvals, 1.0)
        # tied spectrum: compare subspaces, here all of R^3
        np.testing.assert_allclose(ge.eigvecs.T @ ge.eigvecs, np.eye(3), atol=1e-12)

    def test_against_whitening_oracle(self):
        rng = np.random.default_rng(3)
        A, B = random_psd(rng, 5, 5), random_spd(rng, 5)
        ge = linalg.gen_eig(A, B)
        w, U = np.linalg.eigh(B)
        Bmh = (U / np.sqrt(w)) @ U.T
        lam, W = np.linalg.eigh(Bmh @ A @ Bmh)
        np.testing.assert_allclose(ge.eigvals, lam[::-1], rtol=1e-10)
        V = Bmh @ W[:, ::-1]
        for k in range(5):
            v, u = V[:, k], ge.eigvecs[:, k]
            assert min(np.linalg.norm(v - u), np.linalg.norm(v + u)) < 1e-8

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 7), st.integers(0, 10_000))
    def test_invariants(self, n, seed):
        rng = np.random.default_rng(seed)
        A = random_psd(rng, n, rng.integers(1, n + 1))
        B = random_spd(rng, n, cond=1e4)
        ge = linalg.gen_eig(A, B)
        V, lam = ge.eigvecs, ge.eigvals
        assert np.linalg.norm(A @ V - B @ V * lam) <= 1e-10 * np.linalg.norm(A)
        assert np.linalg.norm(V.T @ B @ V - np.eye(n)) <= 1e-10
        assert np.all(np.diff(lam) <= 1e-12)
        np.testing.assert_allclose(lam.sum(), np.trace(np.linalg.solve(B, A)), rtol=1e-10)

    def test_errors(self):
        with pytest.raises(NotPositiveDefinite):
            linalg.gen_eig(np.eye(2), np.diag([1.0, 0.0]))
        with pytest.raises(NonSymmetric):
            linalg.gen_eig(np.array([[1.0, 2], [0, 1]]), np.eye(2))
        with pytest.raises(DimensionMismatch):
            linalg.gen_eig(np.eye(2), np.eye(3))


class TestPsdSqrt:
    def test_diagonal(self):
        np.testing.assert_allclose(linalg.psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    def test_zero(self):
        np.testing.assert_array_equal(linalg.psd_sqrt(np.zeros((2, 2))), np.zeros((2, 2)))

    def test_reconstruction_and_commutation(self):
        A = random_spd(np.random.default_rng(0), 4, 100)
        S = linalg.psd_sqrt(A)
        assert np.linalg.norm(S @ S - A) <= 1e-10 * np.linalg.norm(A)
        assert np.linalg.norm(S @ A - A @ S) <= 1e-9 * np.linalg.norm(A) ** 2

    def test_clamps_tiny_negative(self):
        S = linalg.psd_sqrt(np.diag([1.0, -1e-14]))
        np.testing.assert_allclose(S, np.diag([1.0, 0.0]))

    def test_indefinite(self):
        with pytest.raises(IndefiniteMatrix):
            linalg.psd_sqrt(np.diag([1.0, -0.1]))


class TestPinv:
    def test_examples(self):
        np.testing.assert_allclose(linalg.pinv(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))
        np.testing.assert_allclose(linalg.pinv(np.eye(3)), np.eye(3))

    def test_projector_identity(self):
        P = linalg.pinv(A3) @ A3
        U = np.array([[1.0, 2, 1], [1, 0, -1]]).T
        U /= np.linalg.norm(U, axis=0)
        np.testing.assert_allclose(P, U @ U.T, atol=1e-12)

    def test_double_pinv(self):
        A = random_psd(np.random.default_rng(1), 5, 3)
        np.testing.assert_allclose(linalg.pinv(linalg.pinv(A)), A, atol=1e-9)
        np.testing.assert_allclose(A @ linalg.pinv(A) @ A, A, atol=1e-9)


class TestRangeResidual:
    def test_examples(self):
        assert linalg.range_residual(np.diag([1.0, 0]), [3.0, 0]) == 0
        assert linalg.range_residual(np.diag([1.0, 0]), [0.0, 1]) == pytest.approx(1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            linalg.range_residual(np.eye(2), np.ones(3))
