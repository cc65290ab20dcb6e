"""Tests for the CES data model: density generators, sampling, expectations."""

import numpy as np
import pytest
from scipy import stats

from cesdoa.ces import (
    Gaussian,
    GeneralizedGaussian,
    SnapshotSet,
    StudentT,
    density_h,
    expected_q2psi2,
    expected_q2psi2_numeric,
    modular_moment,
    modular_pdf,
    psi,
    sample_modular_variate,
    sample_snapshots,
    sample_uniform_sphere,
)

ALL_FAMILIES = [
    Gaussian(),
    StudentT(1.5),
    StudentT(2.0),
    StudentT(5.0),
    GeneralizedGaussian(0.1),
    GeneralizedGaussian(0.5),
    GeneralizedGaussian(1.0),
    GeneralizedGaussian(1.5),
]


def scipy_modular_dist(dg, n):
    """Independent scipy reference distribution for the modular variate."""
    if isinstance(dg, Gaussian):
        return stats.gamma(a=n)
    if isinstance(dg, StudentT):
        return stats.betaprime(n, dg.lam, scale=dg.lam - 1.0)
    return stats.gengamma(a=n / dg.s, c=dg.s, scale=dg.b(n) ** (1.0 / dg.s))


class TestDensityGeneratorTypes:
    def test_student_t_requires_lam_above_one(self):
        with pytest.raises(ValueError):
            StudentT(1.0)
        with pytest.raises(ValueError):
            StudentT(0.5)

    def test_gg_requires_positive_shape(self):
        with pytest.raises(ValueError):
            GeneralizedGaussian(0.0)
        with pytest.raises(ValueError):
            GeneralizedGaussian(-1.0)

    def test_student_t_eta(self):
        assert StudentT(2.0).eta == pytest.approx(2.0)
        assert StudentT(5.0).eta == pytest.approx(1.25)

    def test_gg_scale_collapses_at_s1(self):
        # b = [N Gamma(N)/Gamma(N+1)]^1 = 1 for every N
        for n in (1, 2, 4, 8):
            assert GeneralizedGaussian(1.0).b(n) == pytest.approx(1.0, rel=1e-14)


class TestDensityH:
    def test_gaussian_n1_origin(self):
        assert density_h(Gaussian(), 1, 0.0) == pytest.approx(1.0 / np.pi, rel=1e-14)

    def test_student_t_lam2_n1_origin(self):
        # Gamma(3)/(pi Gamma(2)) * 1^2 * 1^-3 = 2/pi
        assert density_h(StudentT(2.0), 1, 0.0) == pytest.approx(2.0 / np.pi, rel=1e-14)

    def test_gg_s1_equals_gaussian(self):
        t = np.array([0.0, 0.3, 1.7, 9.0])
        got = density_h(GeneralizedGaussian(1.0), 2, t)
        want = density_h(Gaussian(), 2, t)
        np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_rejects_negative_argument(self):
        with pytest.raises(ValueError):
            density_h(Gaussian(), 4, -0.1)

    def test_pdf_normalizes_in_z_space_n1(self):
        # For N=1 the full pdf is h(|z|^2); integrate over the complex plane
        # in polar coordinates: int_0^inf h(r^2) 2 pi r dr = 1.
        from scipy.integrate import quad

        for dg in (Gaussian(), StudentT(2.0), GeneralizedGaussian(0.5)):
            val, _ = quad(lambda r: density_h(dg, 1, r * r) * 2 * np.pi * r, 0, np.inf)
            assert val == pytest.approx(1.0, abs=1e-9)


class TestPsi:
    def test_gaussian_is_minus_one(self):
        assert psi(Gaussian(), 3, 0.1) == -1.0
        assert psi(Gaussian(), 3, 42.0) == -1.0

    def test_student_t_paper_value(self):
        # lam=2 (eta=2), N=8, t=1: -(2+8)/(1+1) = -5
        assert psi(StudentT(2.0), 8, 1.0) == pytest.approx(-5.0, rel=1e-14)

    def test_gg_s1_matches_gaussian(self):
        assert psi(GeneralizedGaussian(1.0), 2, 3.0) == pytest.approx(-1.0, rel=1e-12)

    def test_always_negative(self):
        t = np.geomspace(1e-3, 1e3, 25)
        for dg in ALL_FAMILIES:
            assert np.all(psi(dg, 4, t) < 0)

    def test_rejects_nonpositive(self):
        for dg in (Gaussian(), GeneralizedGaussian(0.5)):
            with pytest.raises(ValueError):
                psi(dg, 4, 0.0)
            with pytest.raises(ValueError):
                psi(dg, 4, -1.0)

    @pytest.mark.parametrize("dg", ALL_FAMILIES, ids=repr)
    def test_matches_log_density_derivative(self, dg):
        # Central difference of ln h against psi on t in [0.1, 50].
        t = np.linspace(0.1, 50.0, 120)
        h = 1e-6
        fd = (np.log(density_h(dg, 4, t + h)) - np.log(density_h(dg, 4, t - h))) / (2 * h)
        np.testing.assert_allclose(fd, psi(dg, 4, t), rtol=1e-6)


class TestModularPdf:
    def test_gaussian_n1_exponential(self):
        q = np.array([0.2, 1.0, 4.0])
        np.testing.assert_allclose(modular_pdf(Gaussian(), 1, q), np.exp(-q), rtol=1e-14)

    def test_gaussian_n4_gamma_mode(self):
        # Gamma(4, 1) density with mode at q = 3
        q = np.linspace(0.5, 8.0, 2001)
        p = modular_pdf(Gaussian(), 4, q)
        np.testing.assert_allclose(p, stats.gamma(a=4).pdf(q), rtol=1e-12)
        assert q[np.argmax(p)] == pytest.approx(3.0, abs=0.01)

    def test_gg_s1_collapse(self):
        q = np.geomspace(0.01, 30, 50)
        np.testing.assert_allclose(
            modular_pdf(GeneralizedGaussian(1.0), 4, q),
            modular_pdf(Gaussian(), 4, q),
            rtol=1e-12,
        )

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            modular_pdf(Gaussian(), 2, 0.0)

    @pytest.mark.parametrize("dg", ALL_FAMILIES, ids=repr)
    def test_matches_scipy_reference(self, dg):
        q = np.geomspace(0.05, 40.0, 40)
        np.testing.assert_allclose(
            modular_pdf(dg, 8, q), scipy_modular_dist(dg, 8).pdf(q), rtol=1e-10
        )

    @pytest.mark.parametrize("n", [1, 2, 4, 8])
    @pytest.mark.parametrize("dg", ALL_FAMILIES, ids=repr)
    def test_normalization_and_mean_constraint(self, dg, n):
        assert modular_moment(dg, n, order=0) == pytest.approx(1.0, abs=1e-8)
        assert modular_moment(dg, n, order=1) == pytest.approx(n, rel=1e-8)


class TestSamplers:
    def test_modular_means(self):
        rng = np.random.default_rng(2024)
        n, draws = 8, 10**6
        q = sample_modular_variate(Gaussian(), n, rng, size=draws)
        assert q.mean() == pytest.approx(n, rel=0.01)
        q = sample_modular_variate(StudentT(2.0), n, rng, size=draws)
        assert q.mean() == pytest.approx(n, rel=0.03)
        q = sample_modular_variate(GeneralizedGaussian(1.0), n, rng, size=draws)
        assert q.mean() == pytest.approx(n, rel=0.01)

    @pytest.mark.parametrize("dg", ALL_FAMILIES, ids=repr)
    def test_modular_goodness_of_fit(self, dg):
        rng = np.random.default_rng(8)
        draws = 10**5
        q = sample_modular_variate(dg, 8, rng, size=draws)
        assert np.all(q >= 0)
        stat = stats.kstest(q, scipy_modular_dist(dg, 8).cdf).statistic
        assert stat < 1.6276 / np.sqrt(draws)  # 1% critical value

    def test_gg_s1_same_construction_as_gaussian(self):
        # Both reduce to Gamma(N, 1); identical streams give identical draws.
        q1 = sample_modular_variate(Gaussian(), 8, np.random.default_rng(3), size=100)
        q2 = sample_modular_variate(GeneralizedGaussian(1.0), 8, np.random.default_rng(3), size=100)
        np.testing.assert_allclose(q1, q2, rtol=1e-12)

    def test_sphere_unit_norm(self):
        rng = np.random.default_rng(0)
        u = sample_uniform_sphere(5, rng, size=200)
        np.testing.assert_allclose(np.linalg.norm(u, axis=1), 1.0, rtol=1e-13)
        single = sample_uniform_sphere(1, rng)
        assert abs(abs(single[0]) - 1.0) < 1e-13

    def test_sphere_isotropy(self):
        rng = np.random.default_rng(1)
        n, draws = 4, 10**6
        u = sample_uniform_sphere(n, rng, size=draws)
        second_moment = u.conj().T @ u / draws
        np.testing.assert_allclose(second_moment, np.eye(n) / n, atol=3e-3)


class TestSampleSnapshots:
    def test_gaussian_identity_covariance(self):
        rng = np.random.default_rng(12)
        n, draws = 4, 200_000
        snaps = sample_snapshots(np.eye(n), Gaussian(), draws, rng)
        cov = snaps.data.T @ snaps.data.conj() / draws
        np.testing.assert_allclose(cov, np.eye(n), atol=0.02)

    def test_quadratic_form_distribution(self, scenario):
        from cesdoa.geometry import build_scatter

        sigma = build_scatter(scenario)
        rng = np.random.default_rng(3)
        dg = StudentT(2.0)
        snaps = sample_snapshots(sigma, dg, 10**5, rng)
        z = snaps.data
        forms = np.real(np.sum(z.conj().T * np.linalg.solve(sigma, z.T), axis=0))
        res = stats.kstest(forms, scipy_modular_dist(dg, 8).cdf)
        assert res.pvalue > 0.01

    def test_phase_rotation_leaves_quadratic_forms(self, scenario):
        from cesdoa.geometry import build_scatter

        sigma = build_scatter(scenario)
        rng = np.random.default_rng(4)
        snaps = sample_snapshots(sigma, Gaussian(), 64, rng)
        z = snaps.data
        rotated = z * np.exp(1j * 0.77)
        f1 = np.real(np.sum(z.conj().T * np.linalg.solve(sigma, z.T), axis=0))
        f2 = np.real(np.sum(rotated.conj().T * np.linalg.solve(sigma, rotated.T), axis=0))
        np.testing.assert_allclose(f1, f2, rtol=1e-12)

    def test_rejects_indefinite_scatter(self):
        rng = np.random.default_rng(0)
        bad = np.diag([1.0, -0.5])
        with pytest.raises(ValueError):
            sample_snapshots(bad, Gaussian(), 4, rng)

    def test_snapshot_set_validation(self):
        with pytest.raises(ValueError):
            SnapshotSet(np.zeros((0, 3)))
        with pytest.raises(ValueError):
            SnapshotSet(np.array([[np.inf, 0.0]]))


class TestExpectedQ2Psi2:
    def test_paper_values(self):
        assert expected_q2psi2(StudentT(2.0), 8) == pytest.approx(720.0 / 11.0, rel=1e-14)
        assert expected_q2psi2(GeneralizedGaussian(0.1), 8) == pytest.approx(64.8, rel=1e-14)
        assert expected_q2psi2(Gaussian(), 8) == pytest.approx(72.0, rel=1e-14)
        assert expected_q2psi2(GeneralizedGaussian(1.0), 8) == pytest.approx(72.0, rel=1e-14)

    def test_numeric_examples(self):
        assert expected_q2psi2_numeric(StudentT(2.0), 8) == pytest.approx(720.0 / 11.0, rel=1e-8)
        assert expected_q2psi2_numeric(GeneralizedGaussian(1.5), 4) == pytest.approx(22.0, rel=1e-8)
        assert expected_q2psi2_numeric(Gaussian(), 2) == pytest.approx(6.0, rel=1e-8)

    @pytest.mark.parametrize("n", [2, 4, 8])
    @pytest.mark.parametrize("dg", ALL_FAMILIES, ids=repr)
    def test_closed_form_matches_quadrature(self, dg, n):
        closed = expected_q2psi2(dg, n)
        numeric = expected_q2psi2_numeric(dg, n)
        assert numeric == pytest.approx(closed, rel=1e-8)

    def test_gaussian_collapse_exact(self):
        for n in (2, 4, 8):
            gg = expected_q2psi2(GeneralizedGaussian(1.0), n)
            ga = expected_q2psi2(Gaussian(), n)
            assert abs(gg - ga) <= 1e-12 * ga
