import math

import numpy as np
import pytest

from fluctrack.gm import KalmanPrecompute, truncate_mixture, update_kinematic
from fluctrack.models import LinearGaussianModel
from fluctrack.rfs import GaussianComponent, GaussianMixture

from .test_models import scalar_model


def mixture_moments(gm):
    w = gm.weights
    means = gm.means
    covs = gm.covariances
    mean = np.einsum("i,ij->j", w, means)
    dev = means - mean
    cov = np.einsum("i,ijk->jk", w, covs) + np.einsum("i,ij,ik->jk", w, dev, dev)
    return mean, cov


def cv_model():
    return LinearGaussianModel.constant_velocity(1.0, 10.0, 20.0)


class TestUpdateKinematic:
    def test_scalar_kalman_algebra(self):
        gm = GaussianMixture((GaussianComponent(1.0, [0.0], [[1.0]]),))
        post, xi = update_kinematic(gm, np.array([1.0]), scalar_model())
        comp = post.components[0]
        assert comp.mean == pytest.approx([0.5])
        np.testing.assert_allclose(comp.covariance, [[0.5]])
        # xi = N(1; 0, S=2)
        expected = math.exp(-0.25) / math.sqrt(2 * math.pi * 2.0)
        assert xi[0] == pytest.approx(expected, rel=1e-12)

    def test_measurement_at_mean_shrinks_covariance(self):
        model = cv_model()
        prior_cov = np.diag([400.0, 100.0, 400.0, 100.0])
        mean = np.array([100.0, 5.0, 50.0, -3.0])
        gm = GaussianMixture((GaussianComponent(1.0, mean, prior_cov),))
        post, _ = update_kinematic(gm, np.array([100.0, 50.0]), model)
        comp = post.components[0]
        np.testing.assert_allclose(comp.mean, mean, atol=1e-9)
        assert np.trace(comp.covariance) < np.trace(prior_cov)
        comp.validate()

    def test_likelihood_shifts_component_weights(self):
        model = cv_model()
        cov = np.diag([400.0, 100.0, 400.0, 100.0])
        m1 = np.array([0.0, 0.0, 0.0, 0.0])
        m2 = np.array([500.0, 0.0, 0.0, 0.0])
        gm = GaussianMixture(
            (GaussianComponent(0.5, m1, cov), GaussianComponent(0.5, m2, cov))
        )
        post, _ = update_kinematic(gm, np.array([0.0, 0.0]), model)
        assert post.components[0].weight > 0.5
        assert post.weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_posterior_normalized_and_pd(self):
        rng = np.random.default_rng(13)
        model = cv_model()
        comps = []
        for w in (0.3, 0.2, 0.5):
            a = rng.normal(size=(4, 4))
            comps.append(
                GaussianComponent(w, rng.normal(scale=100.0, size=4), a @ a.T + 50 * np.eye(4))
            )
        gm = GaussianMixture(tuple(comps))
        post, xi = update_kinematic(gm, rng.normal(scale=100.0, size=2), model)
        assert post.weights.sum() == pytest.approx(1.0, abs=1e-9)
        assert xi.shape == (3,)
        for comp in post.components:
            comp.validate(rtol=1e-9)

    def test_precompute_matches_direct_update(self):
        model = cv_model()
        gm = GaussianMixture(
            (GaussianComponent(1.0, np.array([10.0, 1.0, -5.0, 2.0]), 200.0 * np.eye(4)),)
        )
        pre = KalmanPrecompute(gm, model)
        z = np.array([18.0, -2.0])
        post_a, xi_a = pre.posterior(z)
        post_b, xi_b = update_kinematic(gm, z, model)
        np.testing.assert_allclose(xi_a, xi_b)
        np.testing.assert_allclose(post_a.means, post_b.means)
        assert pre.log_likelihood(z) == pytest.approx(math.log(float(gm.weights @ xi_a)))
        assert pre.min_mahalanobis_sq(z) >= 0.0


class TestTruncateMixture:
    def test_identity_when_nothing_applies(self):
        gm = GaussianMixture(
            (
                GaussianComponent(0.5, np.zeros(4), np.eye(4)),
                GaussianComponent(0.5, 100.0 * np.ones(4), np.eye(4)),
            )
        )
        out = truncate_mixture(gm, 1e-5, 4.0, 100)
        assert len(out) == 2
        np.testing.assert_allclose(out.weights, [0.5, 0.5])

    def test_null_thresholds_are_identity(self):
        gm = GaussianMixture(
            (
                GaussianComponent(0.6, np.zeros(4), np.eye(4)),
                GaussianComponent(0.4, np.zeros(4), np.eye(4)),
            )
        )
        out = truncate_mixture(gm, 0.0, 0.0, 100)
        assert len(out) == 2

    def test_identical_components_merge(self):
        gm = GaussianMixture(
            (
                GaussianComponent(0.6, np.zeros(4), np.eye(4)),
                GaussianComponent(0.4, np.zeros(4), np.eye(4)),
            )
        )
        out = truncate_mixture(gm, 1e-5, 4.0, 100)
        assert len(out) == 1
        assert out.components[0].weight == pytest.approx(1.0)

    def test_merge_preserves_mixture_moments(self):
        rng = np.random.default_rng(2)
        comps = []
        for _ in range(6):
            a = rng.normal(size=(4, 4))
            comps.append(
                GaussianComponent(
                    rng.uniform(0.1, 1.0), rng.normal(scale=2.0, size=4), a @ a.T + 3 * np.eye(4)
                )
            )
        gm = GaussianMixture(tuple(comps)).normalized()
        before = mixture_moments(gm)
        out = truncate_mixture(gm, 0.0, 6.0, 100)
        after = mixture_moments(out)
        np.testing.assert_allclose(after[0], before[0], atol=1e-9)
        np.testing.assert_allclose(after[1], before[1], atol=1e-9)

    def test_prune_and_cap(self):
        comps = tuple(
            GaussianComponent(w, float(i) * 50.0 * np.ones(4), np.eye(4))
            for i, w in enumerate([0.5, 0.3, 0.15, 0.04, 0.01])
        )
        gm = GaussianMixture(comps)
        out = truncate_mixture(gm, 0.02, 1e-9, 3)
        assert len(out) == 3
        assert out.weights.sum() == pytest.approx(1.0)
        assert out.weights[0] == pytest.approx(0.5 / 0.95)

    def test_all_pruned_keeps_strongest(self):
        comps = tuple(
            GaussianComponent(w, float(i) * np.ones(4), np.eye(4))
            for i, w in enumerate([0.4, 0.6])
        )
        out = truncate_mixture(GaussianMixture(comps), 0.9, 1e-9, 10)
        assert len(out) == 1
        assert out.components[0].mean == pytest.approx(np.ones(4))
