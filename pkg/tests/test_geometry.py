"""Tests for ULA steering vectors, the structured scatter, and projectors."""

import numpy as np
import pytest

from cesdoa.geometry import (
    SourceScenario,
    build_scatter,
    orthogonal_projector,
    steering_derivative,
    steering_matrix,
    steering_vector,
)


class TestSteeringVector:
    def test_zero_frequency(self):
        np.testing.assert_array_equal(steering_vector(0.0, 4), np.ones(4))

    def test_quarter_frequency(self):
        np.testing.assert_allclose(
            steering_vector(0.25, 4), np.array([1, 1j, -1, -1j]), atol=1e-15
        )

    def test_half_frequency(self):
        np.testing.assert_allclose(steering_vector(0.5, 3), np.array([1, -1, 1]), atol=1e-15)

    def test_unit_modulus_entries(self):
        for nu in (-0.37, 0.111, 0.49):
            assert np.abs(np.abs(steering_vector(nu, 16)) - 1.0).max() < 1e-15

    def test_first_element_exactly_one(self):
        assert steering_vector(0.123, 8)[0] == 1.0 + 0.0j


class TestSteeringDerivative:
    def test_zero_frequency(self):
        np.testing.assert_allclose(
            steering_derivative(0.0, 3), np.array([0, 2j * np.pi, 4j * np.pi]), atol=1e-15
        )

    def test_first_element_zero(self):
        for nu in (-0.4, 0.0, 0.3):
            assert steering_derivative(nu, 8)[0] == 0.0

    @pytest.mark.parametrize("nu", [-0.4, -0.1, 0.0, 0.3])
    def test_matches_finite_difference(self, nu):
        h = 1e-6
        fd = (steering_vector(nu + h, 8) - steering_vector(nu - h, 8)) / (2 * h)
        np.testing.assert_allclose(steering_derivative(nu, 8), fd, atol=1e-5)


class TestSteeringMatrix:
    def test_single_column(self):
        np.testing.assert_allclose(
            steering_matrix([0.2], 5), steering_vector(0.2, 5)[:, None], rtol=1e-15
        )

    def test_columns_match_vectors(self):
        nus = np.array([-0.1, 0.3])
        a = steering_matrix(nus, 8)
        assert a.shape == (8, 2)
        for k, nu in enumerate(nus):
            np.testing.assert_allclose(a[:, k], steering_vector(nu, 8), rtol=1e-15)

    def test_full_column_rank_for_distinct_frequencies(self):
        a = steering_matrix([-0.1, 0.3], 8)
        assert np.linalg.svd(a, compute_uv=False).min() > 0.1

    def test_duplicate_frequencies_rank_deficient(self):
        a = steering_matrix([0.1, 0.1], 8)
        assert np.linalg.svd(a, compute_uv=False).min() < 1e-12


class TestSourceScenario:
    def test_rejects_k_not_below_n(self):
        cov = np.eye(2, dtype=complex)
        with pytest.raises(ValueError, match="K < N"):
            SourceScenario(2, np.array([-0.1, 0.3]), cov, 1.0)

    def test_rejects_duplicate_frequencies(self):
        with pytest.raises(ValueError, match="distinct"):
            SourceScenario(8, np.array([0.1, 0.1]), np.eye(2, dtype=complex), 1.0)

    def test_rejects_out_of_band_frequency(self):
        with pytest.raises(ValueError, match="0.5"):
            SourceScenario(8, np.array([0.7]), np.eye(1, dtype=complex), 1.0)

    def test_rejects_non_hermitian_cov(self):
        cov = np.array([[1.0, 1.0], [0.0, 1.0]], dtype=complex)
        with pytest.raises(ValueError, match="Hermitian"):
            SourceScenario(8, np.array([-0.1, 0.3]), cov, 1.0)

    def test_rejects_indefinite_cov(self):
        cov = np.diag([1.0, -0.2]).astype(complex)
        with pytest.raises(ValueError, match="semidefinite"):
            SourceScenario(8, np.array([-0.1, 0.3]), cov, 1.0)

    def test_rejects_nonpositive_noise(self):
        with pytest.raises(ValueError, match="noise"):
            SourceScenario(8, np.array([0.1]), np.eye(1, dtype=complex), 0.0)

    def test_zero_source_cov_allowed(self):
        scen = SourceScenario(4, np.array([0.2]), np.zeros((1, 1), complex), 2.0)
        np.testing.assert_allclose(build_scatter(scen), 2.0 * np.eye(4), atol=1e-15)


class TestBuildScatter:
    def test_hand_two_sensor_case(self):
        # One source at nu=0, unit power, unit noise: all-ones + identity.
        scen = SourceScenario(2, np.array([0.0]), np.array([[1.0]], complex), 1.0)
        np.testing.assert_allclose(build_scatter(scen), np.array([[2, 1], [1, 2]]), atol=1e-15)

    def test_hermitian_and_floor_eigenvalue(self, scenario):
        sigma = build_scatter(scenario)
        assert np.abs(sigma - sigma.conj().T).max() < 1e-12
        assert np.linalg.eigvalsh(sigma).min() >= scenario.noise_power - 1e-12

    def test_trace_identity(self, scenario):
        # Unit-modulus steering entries: trace = N sum_k Gamma_kk + N sigma^2.
        sigma = build_scatter(scenario)
        n = scenario.n_sensors
        want = n * np.trace(scenario.source_cov).real + n * scenario.noise_power
        assert np.trace(sigma).real == pytest.approx(want, rel=1e-12)


class TestOrthogonalProjector:
    def test_annihilates_columns(self, scenario):
        a = steering_matrix(scenario.frequencies, scenario.n_sensors)
        proj = orthogonal_projector(a)
        assert np.abs(proj @ a).max() < 1e-12

    def test_idempotent_and_hermitian(self, scenario):
        a = steering_matrix(scenario.frequencies, scenario.n_sensors)
        proj = orthogonal_projector(a)
        assert np.abs(proj @ proj - proj).max() < 1e-12
        assert np.abs(proj - proj.conj().T).max() < 1e-12

    def test_trace_is_n_minus_k(self, scenario):
        a = steering_matrix(scenario.frequencies, scenario.n_sensors)
        assert np.trace(orthogonal_projector(a)).real == pytest.approx(6.0, abs=1e-12)

    def test_square_invertible_gives_zero(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        assert np.abs(orthogonal_projector(a)).max() < 1e-10

    def test_rank_deficient_reported(self):
        a = steering_matrix([0.1, 0.1], 8)
        with pytest.raises(ValueError, match="condition"):
            orthogonal_projector(a)
