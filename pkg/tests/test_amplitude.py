import math

import numpy as np
import pytest
from scipy import integrate, stats

from fluctrack.amplitude import (
    MarginalizedAmplitudeRatio,
    SwerlingModel,
    amplitude_likelihood,
    clutter_amplitude_pdf,
    detection_probability,
    log_amplitude_likelihood,
    marginalized_likelihood_ratio,
    sample_amplitude,
    sample_raw_amplitude,
    snr_db_from_linear,
    snr_linear_from_db,
)

D_15DB = 10**1.5 - 1.0  # SNR 15 dB in linear scale, ~30.623


def raw_pdf(a, d, kind):
    """Unthresholded Swerling density, written out independently."""
    x = 1.0 + d
    if kind == 1:
        return a / x * np.exp(-(a**2) / (2 * x))
    return 9.0 * a**3 / (2.0 * x**2) * np.exp(-3.0 * a**2 / (2.0 * x))


class TestDbConversions:
    def test_round_trip(self):
        for db in (0.0, 10.0, 15.0, 40.0):
            assert snr_db_from_linear(snr_linear_from_db(db)) == pytest.approx(db)

    def test_convention(self):
        assert snr_linear_from_db(15.0) == pytest.approx(D_15DB)
        assert snr_db_from_linear(0.0) == pytest.approx(0.0)


class TestDetectionProbability:
    def test_zero_threshold_always_detects(self):
        for kind in (1, 3):
            model = SwerlingModel(kind, 0.0)
            for d in (0.0, 1.0, 30.0):
                assert detection_probability(d, model) == pytest.approx(1.0)

    def test_swerling1_closed_form_values(self):
        model = SwerlingModel(1, 2.0)
        assert detection_probability(0.0, model) == pytest.approx(math.exp(-2.0))
        expected = math.exp(-4.0 / (2.0 * (1.0 + D_15DB)))
        assert detection_probability(D_15DB, model) == pytest.approx(expected)
        assert expected == pytest.approx(0.9387, abs=1e-4)

    @pytest.mark.parametrize("kind", [1, 3])
    @pytest.mark.parametrize("d", [0.0, 1.7, 5.0, D_15DB, 315.2])
    @pytest.mark.parametrize("tau", [1.0, 4.0])
    def test_matches_quadrature_of_raw_density(self, kind, d, tau):
        model = SwerlingModel(kind, tau)
        val, _ = integrate.quad(raw_pdf, tau, np.inf, args=(d, kind))
        assert detection_probability(d, model) == pytest.approx(val, abs=1e-8)

    def test_monotone_in_snr_and_threshold(self):
        ds = np.linspace(0.0, 50.0, 40)
        taus = np.linspace(0.0, 6.0, 30)
        for kind in (1, 3):
            along_d = detection_probability(ds, SwerlingModel(kind, 2.0))
            assert np.all(np.diff(along_d) >= 0)
            along_tau = [detection_probability(10.0, SwerlingModel(kind, t)) for t in taus]
            assert np.all(np.diff(along_tau) <= 0)


class TestAmplitudeLikelihood:
    def test_censored_region_rejected(self):
        model = SwerlingModel(1, 2.0)
        with pytest.raises(ValueError):
            amplitude_likelihood(1.5, 10.0, model)
        with pytest.raises(ValueError):
            amplitude_likelihood(2.0, 10.0, model)

    def test_boundary_value_swerling1(self):
        # at a -> tau+, d = 0: a/(1+d) * exp(0) = tau
        model = SwerlingModel(1, 2.0)
        assert amplitude_likelihood(2.0 + 1e-12, 0.0, model) == pytest.approx(2.0)

    @pytest.mark.parametrize("kind", [1, 3])
    @pytest.mark.parametrize("d", [0.0, 5.0, 30.0])
    def test_renormalization_integrates_to_one(self, kind, d):
        model = SwerlingModel(kind, 2.0)
        val, _ = integrate.quad(
            lambda a: amplitude_likelihood(a, d, model), 2.0, np.inf
        )
        assert val == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("kind", [1, 3])
    @pytest.mark.parametrize("tau", [0.0, 2.0])
    def test_clutter_density_is_zero_snr_target(self, kind, tau):
        model = SwerlingModel(kind, tau)
        for a in (tau + 0.3, tau + 1.7, tau + 5.0):
            assert clutter_amplitude_pdf(a, model) == pytest.approx(
                amplitude_likelihood(a, 0.0, model)
            )

    def test_vectorized_over_snr(self):
        model = SwerlingModel(3, 2.0)
        d = np.array([0.0, 3.0, 30.0])
        out = log_amplitude_likelihood(5.0, d, model)
        assert out.shape == (3,)
        assert out[0] == pytest.approx(math.log(amplitude_likelihood(5.0, 0.0, model)))


class TestSamplers:
    def test_swerling1_inverse_cdf_distribution(self):
        model = SwerlingModel(1, 2.0)
        d = D_15DB
        rng = np.random.default_rng(101)
        draws = sample_amplitude(d, model, rng, size=10**5)
        assert np.all(draws > 2.0)

        def cdf(a):
            return 1.0 - np.exp((4.0 - np.asarray(a) ** 2) / (2.0 * (1.0 + d)))

        assert stats.kstest(draws, cdf).pvalue > 0.01

    def test_swerling3_mean_matches_quadrature(self):
        model = SwerlingModel(3, 2.0)
        d = D_15DB
        rng = np.random.default_rng(55)
        draws = sample_amplitude(d, model, rng, size=10**5)
        assert np.all(draws > 2.0)
        mean, _ = integrate.quad(
            lambda a: a * amplitude_likelihood(a, d, model), 2.0, np.inf
        )
        mc_sigma = draws.std() / math.sqrt(draws.size)
        assert draws.mean() == pytest.approx(mean, abs=3 * mc_sigma)

    def test_swerling3_distribution(self):
        model = SwerlingModel(3, 2.0)
        rng = np.random.default_rng(56)
        draws = sample_amplitude(5.0, model, rng, size=4 * 10**4)

        def cdf(arr):
            return np.array(
                [
                    integrate.quad(lambda a: amplitude_likelihood(a, 5.0, model), 2.0, v)[0]
                    for v in np.atleast_1d(arr)
                ]
            )

        sub = np.sort(draws[:4000])
        assert stats.kstest(sub, cdf).pvalue > 0.01

    def test_swerling3_concentrates_tighter_than_swerling1(self):
        d = D_15DB
        rng = np.random.default_rng(77)
        s1 = sample_amplitude(d, SwerlingModel(1, 2.0), rng, size=10**5)
        s3 = sample_amplitude(d, SwerlingModel(3, 2.0), rng, size=10**5)
        assert s3.var() < s1.var()

    def test_raw_sampler_detection_rate(self):
        model = SwerlingModel(1, 2.0)
        rng = np.random.default_rng(9)
        raw = sample_raw_amplitude(D_15DB, model, rng, size=10**5)
        rate = float(np.mean(raw > 2.0))
        p = detection_probability(D_15DB, model)
        assert rate == pytest.approx(p, abs=3 * math.sqrt(p * (1 - p) / raw.size))


class TestMarginalizedRatio:
    def test_collapsed_interval_is_point_ratio(self):
        model = SwerlingModel(1, 2.0)
        a = 6.9
        d0 = snr_linear_from_db(20.0)
        point = amplitude_likelihood(a, d0, model) / clutter_amplitude_pdf(a, model)
        assert marginalized_likelihood_ratio(a, model, (20.0, 20.0)) == pytest.approx(point)
        narrow = marginalized_likelihood_ratio(a, model, (20.0 - 5e-4, 20.0 + 5e-4), step_db=1e-4)
        assert narrow == pytest.approx(point, rel=1e-4)

    def test_strong_returns_look_less_like_clutter(self):
        model = SwerlingModel(1, 2.0)
        low = marginalized_likelihood_ratio(2.05, model, (10.0, 40.0))
        high = marginalized_likelihood_ratio(8.0, model, (10.0, 40.0))
        assert low < high

    def test_quadrature_refinement(self):
        model = SwerlingModel(1, 2.0)
        coarse = marginalized_likelihood_ratio(6.9, model, (10.0, 40.0), step_db=0.1)
        fine = marginalized_likelihood_ratio(6.9, model, (10.0, 40.0), step_db=0.01)
        assert coarse == pytest.approx(fine, rel=1e-6)

    def test_cached_form_agrees(self):
        model = SwerlingModel(3, 2.0)
        cached = MarginalizedAmplitudeRatio(model, (10.0, 40.0))
        for a in (2.5, 6.9, 12.0):
            assert math.exp(cached.log_ratio(a)) == pytest.approx(
                marginalized_likelihood_ratio(a, model, (10.0, 40.0))
            )

    def test_reversed_interval_rejected(self):
        with pytest.raises(ValueError):
            marginalized_likelihood_ratio(5.0, SwerlingModel(1, 2.0), (40.0, 10.0))


class TestSwerlingModelValidation:
    def test_kind_checked(self):
        with pytest.raises(ValueError):
            SwerlingModel(2, 1.0)

    def test_threshold_checked(self):
        with pytest.raises(ValueError):
            SwerlingModel(1, -0.5)
