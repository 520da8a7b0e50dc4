import numpy as np
import pytest
from scipy.integrate import trapezoid

from kherd.constants import RngStream
from kherd.exceptions import (
    DimensionMismatch, NonFiniteValue, NotPositiveDefinite, NotSymmetric)
from kherd.utils.numerics import (
    as_points, as_sym_matrix, as_vec, cholesky, derive_rng, mvn_logpdf, mvn_sample, psd_factor)


class TestDeriveRng:
    """Test cases for the seeded sub-stream contract."""

    def test_same_seed_and_stream_repeat(self):
        a = derive_rng(42, RngStream.HERDING).standard_normal(5)
        b = derive_rng(42, RngStream.HERDING).standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_streams_and_keys_are_independent(self):
        base = derive_rng(42, RngStream.IID).standard_normal(5)
        other_stream = derive_rng(42, RngStream.HERDING).standard_normal(5)
        other_key = derive_rng(42, RngStream.IID, 1).standard_normal(5)
        assert not np.array_equal(base, other_stream)
        assert not np.array_equal(base, other_key)


class TestValidation:
    """Test cases for the coercion helpers."""

    def test_as_vec_rejects_nan(self):
        with pytest.raises(NonFiniteValue):
            as_vec([1.0, np.nan])

    def test_as_vec_dimension(self):
        with pytest.raises(DimensionMismatch):
            as_vec([1.0, 2.0], dim=3)

    def test_as_points_promotes_vector(self):
        assert as_points([1.0, 2.0]).shape == (1, 2)
        assert as_points([]).shape == (0, 0)

    def test_as_sym_matrix_rejects_asymmetric(self):
        with pytest.raises(NotSymmetric):
            as_sym_matrix([[1.0, 0.5], [0.4, 1.0]])

    def test_non_finite_matrix_is_a_configuration_error(self):
        with pytest.raises(ValueError):
            as_sym_matrix([[1.0, np.inf], [np.inf, 1.0]])

    def test_symmetry_tolerance_is_relative_for_small_matrices(self):
        with pytest.raises(NotSymmetric):
            as_sym_matrix(1e-9 * np.array([[1.0, 0.5], [0.5 + 1e-6, 1.0]]))

    def test_symmetry_tolerance_is_relative_for_large_matrices(self):
        m = 1e6 * np.array([[1.0, 0.5], [0.5, 1.0]])
        m[1, 0] += 1e-8
        np.testing.assert_array_equal(as_sym_matrix(m), m)


class TestCholesky:
    """Test cases for the factorization primitives."""

    def test_factor_reproduces_matrix(self):
        m = np.array([[4.0, 1.2, 0.3], [1.2, 2.0, -0.4], [0.3, -0.4, 1.5]])
        lower = cholesky(m)
        np.testing.assert_allclose(lower @ lower.T, m, atol=1e-12)
        assert np.allclose(lower, np.tril(lower))

    @pytest.mark.parametrize("dim", [1, 2, 5, 10, 20])
    def test_random_spd_matrices(self, dim):
        a = derive_rng(dim).standard_normal((dim, dim))
        m = a @ a.T + dim * np.eye(dim)
        m = 0.5 * (m + m.T)
        lower = cholesky(m)
        np.testing.assert_allclose(lower @ lower.T, m, rtol=0, atol=1e-10 * np.max(np.abs(m)))
        np.testing.assert_array_equal(lower, np.tril(lower))

    def test_indefinite_matrix_raises(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky([[1.0, 2.0], [2.0, 1.0]])

    def test_singular_matrix_succeeds_with_jitter(self):
        m = np.array([[1.0, 1.0], [1.0, 1.0]])
        lower = cholesky(m)
        np.testing.assert_allclose(lower @ lower.T, m, atol=1e-9)

    def test_asymmetric_matrix_raises(self):
        with pytest.raises(NotSymmetric):
            cholesky([[1.0, 0.0], [1.0, 1.0]])

    def test_psd_factor_zero_matrix(self):
        np.testing.assert_array_equal(psd_factor(np.zeros((3, 3))), np.zeros((3, 3)))

    def test_psd_factor_rank_deficient(self):
        m = np.array([[1.0, 1.0], [1.0, 1.0]])
        factor = psd_factor(m)
        np.testing.assert_allclose(factor @ factor.T, m, atol=1e-12)


class TestNormal:
    """Test cases for the multivariate normal helpers."""

    def test_logpdf_standard_normal_at_origin(self):
        assert mvn_logpdf([0.0, 0.0], [0.0, 0.0], np.eye(2)) == pytest.approx(-np.log(2.0 * np.pi), abs=1e-14)

    def test_logpdf_matches_scalar_formula(self):
        value = mvn_logpdf([1.5], [0.5], [[4.0]])
        expected = -0.5 * (np.log(2.0 * np.pi * 4.0) + 1.0 / 4.0)
        assert value == pytest.approx(expected, abs=1e-14)

    def test_sample_moments(self, rng):
        mean = np.array([1.0, -2.0])
        cov = np.array([[2.0, 0.6], [0.6, 1.0]])
        draws = mvn_sample(rng, mean, cov, 50_000)
        assert draws.shape == (50_000, 2)
        np.testing.assert_allclose(draws.mean(axis=0), mean, atol=0.05)
        np.testing.assert_allclose(np.cov(draws, rowvar=False), cov, atol=0.06)

    def test_sample_is_reproducible(self):
        a = mvn_sample(derive_rng(3), [0.0], [[1.0]], 10)
        b = mvn_sample(derive_rng(3), [0.0], [[1.0]], 10)
        np.testing.assert_array_equal(a, b)

    def test_zero_covariance_gives_the_mean(self, rng):
        draws = mvn_sample(rng, [2.0, 3.0], np.zeros((2, 2)), 4)
        np.testing.assert_array_equal(draws, np.tile([2.0, 3.0], (4, 1)))

    def test_density_integrates_to_one(self):
        grid = np.linspace(-12.0, 14.0, 5201)
        density = np.exp([mvn_logpdf([x], [1.0], [[2.25]]) for x in grid])
        assert trapezoid(density, grid) == pytest.approx(1.0, abs=1e-4)
