import itertools

import numpy as np
import pytest

from fluctrack.rfs import (
    GaussianComponent,
    GaussianMixture,
    GammaDensity,
    Label,
    LabeledTrack,
    LmbDensity,
    SnrParticleSet,
    lmb_subset_weight,
    map_estimate,
)


def make_track(label, existence):
    gm = GaussianMixture(
        (GaussianComponent(1.0, np.zeros(4), np.eye(4)),)
    )
    return LabeledTrack(label=label, existence=existence, kinematic=gm)


def make_lmb(existences):
    return LmbDensity(
        tuple(make_track(Label(1, i), r) for i, r in enumerate(existences))
    )


class TestLabel:
    def test_ordering_is_lexicographic(self):
        assert Label(1, 5) < Label(2, 0)
        assert Label(2, 0) < Label(2, 1)

    def test_serialization_round_trip(self):
        lbl = Label(17, 3)
        assert str(lbl) == "t17.3"
        assert Label.parse("t17.3") == lbl

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValueError):
            Label.parse("17.3")


class TestSubsetWeight:
    def test_single_track_complement(self):
        lmb = make_lmb([0.5])
        assert lmb_subset_weight(lmb, set()) == pytest.approx(0.5)

    def test_single_track_included(self):
        lmb = make_lmb([0.5])
        assert lmb_subset_weight(lmb, {Label(1, 0)}) == pytest.approx(0.5)

    def test_two_track_product(self):
        lmb = make_lmb([0.2, 0.9])
        assert lmb_subset_weight(lmb, {Label(1, 1)}) == pytest.approx(0.8 * 0.9)

    def test_unknown_label_rejected(self):
        lmb = make_lmb([0.5])
        with pytest.raises(ValueError):
            lmb_subset_weight(lmb, {Label(9, 9)})

    @pytest.mark.parametrize("n", [1, 3, 7, 10])
    def test_weights_sum_to_one(self, n):
        rng = np.random.default_rng(42 + n)
        lmb = make_lmb(rng.uniform(0.01, 0.99, size=n))
        labels = lmb.labels
        total = sum(
            lmb_subset_weight(lmb, set(subset))
            for size in range(n + 1)
            for subset in itertools.combinations(labels, size)
        )
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_invariant_under_track_reordering(self):
        rng = np.random.default_rng(3)
        rs = rng.uniform(0.05, 0.95, size=5)
        tracks = tuple(make_track(Label(1, i), r) for i, r in enumerate(rs))
        subset = {Label(1, 0), Label(1, 3)}
        w1 = lmb_subset_weight(LmbDensity(tracks), subset)
        w2 = lmb_subset_weight(LmbDensity(tracks[::-1]), subset)
        assert w1 == pytest.approx(w2, rel=1e-12)

    def test_existence_one_is_clamped(self):
        lmb = make_lmb([1.0])
        assert lmb_subset_weight(lmb, {Label(1, 0)}) == pytest.approx(1.0, abs=1e-8)


class TestMapEstimate:
    def test_threshold_selects_confident_tracks(self):
        lmb = make_lmb([0.9, 0.2])
        count, labels = map_estimate(lmb)
        assert count == 1 and labels == [Label(1, 0)]

    def test_empty_density(self):
        assert map_estimate(LmbDensity(())) == (0, [])

    def test_threshold_boundary(self):
        eps = 1e-6
        lmb = make_lmb([0.5 + eps, 0.5 - eps])
        count, labels = map_estimate(lmb)
        assert count == 1 and labels == [Label(1, 0)]

    def test_sorted_by_existence_descending(self):
        lmb = make_lmb([0.7, 0.95, 0.85])
        _, labels = map_estimate(lmb)
        assert labels == [Label(1, 1), Label(1, 2), Label(1, 0)]


class TestTypes:
    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError):
            LmbDensity((make_track(Label(1, 0), 0.5), make_track(Label(1, 0), 0.6)))

    def test_existence_range_enforced(self):
        with pytest.raises(ValueError):
            make_track(Label(1, 0), 1.5)

    def test_gamma_density_moments(self):
        g = GammaDensity(shape=8.0, rate=2.0)
        assert g.mean == pytest.approx(4.0)
        assert g.variance == pytest.approx(2.0)
        with pytest.raises(ValueError):
            GammaDensity(shape=-1.0, rate=2.0)

    def test_particle_set_validation(self):
        ps = SnrParticleSet(np.array([1.0, 3.0]), np.array([0.5, 0.5]))
        assert ps.mean() == pytest.approx(2.0)
        with pytest.raises(ValueError):
            SnrParticleSet(np.array([-1.0]), np.array([1.0]))

    def test_mixture_normalization_helpers(self):
        gm = GaussianMixture(
            (
                GaussianComponent(2.0, np.zeros(4), np.eye(4)),
                GaussianComponent(6.0, np.ones(4), np.eye(4)),
            )
        )
        norm = gm.normalized()
        norm.validate_normalized()
        assert norm.weights == pytest.approx([0.25, 0.75])
        assert norm.mean() == pytest.approx(0.75 * np.ones(4))

    def test_component_requires_matching_shapes(self):
        with pytest.raises(ValueError):
            GaussianComponent(1.0, np.zeros(4), np.eye(3))
