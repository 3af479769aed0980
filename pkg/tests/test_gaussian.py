import numpy as np
import pytest

from kerndiv import (
    GaussianMoments,
    InputError,
    NumericError,
    kl_gaussian,
    moments,
    w2_gaussian_sq,
)

import oracles


class TestMoments:
    def test_single_sample(self):
        m = moments([[2.0, -1.0]])
        np.testing.assert_array_equal(m.mean, [2.0, -1.0])
        np.testing.assert_array_equal(m.cov, np.zeros((2, 2)))

    def test_two_scalar_samples(self):
        m = moments([[0.0], [2.0]])
        np.testing.assert_allclose(m.mean, [1.0])
        np.testing.assert_allclose(m.cov, [[1.0]])

    def test_two_point_2d_hand_value(self):
        m = moments([[1.0, 0.0], [0.0, 1.0]])
        np.testing.assert_allclose(m.mean, [0.5, 0.5])
        np.testing.assert_allclose(m.cov, [[0.25, -0.25], [-0.25, 0.25]])

    def test_biased_normalization(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(13, 3))
        np.testing.assert_allclose(moments(x).cov, np.cov(x.T, bias=True))

    def test_asymmetric_covariance_rejected(self):
        with pytest.raises(InputError):
            GaussianMoments(mean=[0.0, 0.0], cov=[[1.0, 0.5], [0.0, 1.0]])


class TestW2Gaussian:
    def test_identical_moments(self):
        m = moments([[0.0, 1.0], [1.0, 0.0], [2.0, 2.0]])
        assert w2_gaussian_sq(m, m) == pytest.approx(0.0, abs=1e-12)

    def test_scalar_case(self):
        a = GaussianMoments(mean=[0.0], cov=[[1.0]])
        b = GaussianMoments(mean=[3.0], cov=[[4.0]])
        # (0-3)^2 + (1-2)^2 with standard deviations 1 and 2
        assert w2_gaussian_sq(a, b) == pytest.approx(10.0)

    def test_equal_covariances_reduce_to_mean_gap(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            cov = oracles.random_psd(rng, 3)
            m1, m2 = rng.normal(size=3), rng.normal(size=3)
            a = GaussianMoments(mean=m1, cov=cov)
            b = GaussianMoments(mean=m2, cov=cov)
            expected = float((m1 - m2) @ (m1 - m2))
            assert w2_gaussian_sq(a, b) == pytest.approx(expected, rel=1e-9, abs=1e-10)

    def test_symmetric_in_arguments(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            a = GaussianMoments(rng.normal(size=2), oracles.random_psd(rng, 2))
            b = GaussianMoments(rng.normal(size=2), oracles.random_psd(rng, 2))
            assert w2_gaussian_sq(a, b) == pytest.approx(
                w2_gaussian_sq(b, a), rel=1e-10
            )

    def test_matches_explicit_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            d = int(rng.integers(1, 5))
            a = GaussianMoments(rng.normal(size=d), oracles.random_psd(rng, d))
            b = GaussianMoments(rng.normal(size=d), oracles.random_psd(rng, d))
            expected = oracles.w2_gaussian_explicit(a.mean, a.cov, b.mean, b.cov)
            assert w2_gaussian_sq(a, b) == pytest.approx(expected, rel=1e-9, abs=1e-11)

    def test_root_satisfies_triangle_inequality(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            ms = [
                GaussianMoments(rng.normal(size=3), oracles.random_psd(rng, 3))
                for _ in range(3)
            ]
            dab = np.sqrt(w2_gaussian_sq(ms[0], ms[1]))
            dbc = np.sqrt(w2_gaussian_sq(ms[1], ms[2]))
            dac = np.sqrt(w2_gaussian_sq(ms[0], ms[2]))
            assert dac <= dab + dbc + 1e-8

    def test_trace_route_identity(self):
        # tr((C2 C1)^(1/2)) from the non-symmetric spectrum equals
        # tr((C1^(1/2) C2 C1^(1/2))^(1/2)) from the symmetric one
        rng = np.random.default_rng(5)
        for _ in range(30):
            d = int(rng.integers(1, 7))
            c1 = oracles.random_psd(rng, d)
            c2 = oracles.random_psd(rng, d)
            ev = np.linalg.eigvals(c2 @ c1).real
            lhs = oracles.clipped_sqrt_sum(np.clip(ev, 0.0, None))
            root1 = oracles.psd_root(c1)
            rhs = oracles.clipped_sqrt_sum(np.linalg.eigvalsh(root1 @ c2 @ root1))
            assert lhs == pytest.approx(rhs, rel=1e-8)

    def test_dimension_mismatch(self):
        a = GaussianMoments([0.0], [[1.0]])
        b = GaussianMoments([0.0, 0.0], np.eye(2))
        with pytest.raises(InputError):
            w2_gaussian_sq(a, b)

    def test_indefinite_covariance_rejected(self):
        a = GaussianMoments([0.0, 0.0], np.eye(2))
        bad = GaussianMoments.__new__(GaussianMoments)
        object.__setattr__(bad, "mean", np.zeros(2))
        object.__setattr__(bad, "cov", np.diag([1.0, -1.0]))
        with pytest.raises(NumericError):
            w2_gaussian_sq(a, bad)


class TestKlGaussian:
    def test_identical_moments(self):
        m = GaussianMoments([0.5, -0.5], [[2.0, 0.3], [0.3, 1.0]])
        assert kl_gaussian(m, m) == pytest.approx(0.0, abs=1e-12)

    def test_scalar_equal_variance(self):
        a = GaussianMoments([0.0], [[1.0]])
        b = GaussianMoments([2.0], [[1.0]])
        assert kl_gaussian(a, b) == pytest.approx(2.0)

    def test_matches_quadrature(self):
        rng = np.random.default_rng(6)
        cov_p = oracles.random_psd(rng, 2) + 0.5 * np.eye(2)
        cov_q = oracles.random_psd(rng, 2) + 0.5 * np.eye(2)
        a = GaussianMoments([0.2, -0.1], cov_p)
        b = GaussianMoments([-0.3, 0.4], cov_q)
        expected = oracles.kl_quadrature_2d(a.mean, a.cov, b.mean, b.cov)
        assert kl_gaussian(a, b) == pytest.approx(expected, abs=1e-4)

    def test_nonnegative(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            a = GaussianMoments(
                rng.normal(size=2), oracles.random_psd(rng, 2) + 0.1 * np.eye(2)
            )
            b = GaussianMoments(
                rng.normal(size=2), oracles.random_psd(rng, 2) + 0.1 * np.eye(2)
            )
            assert kl_gaussian(a, b) >= 0.0

    def test_singular_second_argument_named(self):
        a = GaussianMoments([0.0], [[1.0]])
        b = GaussianMoments([0.0], [[0.0]])
        with pytest.raises(NumericError, match="second"):
            kl_gaussian(a, b)

    def test_singular_first_argument_named(self):
        a = GaussianMoments([0.0], [[0.0]])
        b = GaussianMoments([0.0], [[1.0]])
        with pytest.raises(NumericError, match="first"):
            kl_gaussian(a, b)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            kl_gaussian(
                GaussianMoments([0.0], [[1.0]]),
                GaussianMoments([0.0, 0.0], np.eye(2)),
            )
