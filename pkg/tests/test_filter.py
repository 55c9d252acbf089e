import math

import numpy as np
import pytest

from rfscontrol.core import (
    DeltaGlmbDensity,
    DensityError,
    GlmbHypothesis,
    LabeledGaussianMixture,
    MDeltaGlmbDensity,
    TrackLabel,
    logsumexp,
)
from rfscontrol.filter import (
    AssociationDegenerateWarning,
    BirthModel,
    BirthSite,
    FilterParams,
    MotionModel,
    convert_to_lmb,
    map_estimate,
    marginalize_to_mdglmb,
    predict,
    restrict_to_label_sets,
    truncate_density,
    ukf_polar_terms,
    update,
)
from rfscontrol.selfcheck import random_delta_glmb, toy_sensor
from rfscontrol.validation import ekf_polar_update, exhaustive_update_weights
from rfscontrol.world import Region, SensorModel

L0 = TrackLabel(1, 0)
L1 = TrackLabel(1, 1)

LOOSE = FilterParams(max_hypotheses=10000, hypothesis_weight_floor=0.0)


def single_track_density(label=L0, mean=(500.0, 5.0, 200.0, -3.0),
                         sigmas=(80.0, 10.0, 80.0, 10.0)):
    mix = LabeledGaussianMixture.single(label, np.array(mean),
                                        np.diag(np.square(sigmas)))
    hyp = GlmbHypothesis(frozenset([label]), 0, 0.0)
    return DeltaGlmbDensity((hyp,), {(0, label): mix})


def weights_by_labels(density):
    out = {}
    for hyp in density.hypotheses:
        key = frozenset(hyp.labels)
        out[key] = out.get(key, 0.0) + hyp.weight
    return out


class TestPredict:
    def test_certain_survival_no_birth_is_kalman_prediction(self):
        motion = MotionModel.constant_velocity(1.0, 5.0, survival_probability=1.0)
        prior = single_track_density()
        predicted = predict(prior, motion, None, LOOSE)
        assert len(predicted.hypotheses) == 1
        assert predicted.hypotheses[0].weight == pytest.approx(1.0)
        comp = predicted.track_table[(0, L0)].components[0]
        prior_comp = prior.track_table[(0, L0)].components[0]
        assert comp.mean == pytest.approx(motion.transition @ prior_comp.mean)
        want = motion.transition @ prior_comp.cov @ motion.transition.T \
            + motion.process_noise
        assert np.allclose(comp.cov, want)

    def test_survival_enumeration(self):
        motion = MotionModel.constant_velocity(1.0, 5.0, survival_probability=0.98)
        predicted = predict(single_track_density(), motion, None, LOOSE)
        got = weights_by_labels(predicted)
        assert got[frozenset([L0])] == pytest.approx(0.98)
        assert got[frozenset()] == pytest.approx(0.02)

    def test_birth_enumeration_from_empty(self):
        motion = MotionModel.constant_velocity(1.0, 5.0)
        birth = BirthModel((BirthSite(0, 0.1, np.zeros(4), np.eye(4)),))
        predicted = predict(DeltaGlmbDensity.empty(), motion, birth, LOOSE, time=3)
        got = weights_by_labels(predicted)
        born = TrackLabel(3, 0)
        assert got[frozenset()] == pytest.approx(0.9)
        assert got[frozenset([born])] == pytest.approx(0.1)

    def test_joint_survival_and_birth(self):
        motion = MotionModel.constant_velocity(1.0, 5.0, survival_probability=0.9)
        birth = BirthModel((BirthSite(0, 0.2, np.zeros(4), np.eye(4)),))
        predicted = predict(single_track_density(), motion, birth, LOOSE, time=5)
        got = weights_by_labels(predicted)
        born = TrackLabel(5, 0)
        assert got[frozenset([L0, born])] == pytest.approx(0.9 * 0.2)
        assert got[frozenset([L0])] == pytest.approx(0.9 * 0.8)
        assert got[frozenset([born])] == pytest.approx(0.1 * 0.2)
        assert got[frozenset()] == pytest.approx(0.1 * 0.8)

    def test_aggressive_floor_raises(self):
        motion = MotionModel.constant_velocity(1.0, 5.0, survival_probability=0.5)
        params = FilterParams(max_hypotheses=10, hypothesis_weight_floor=0.9)
        with pytest.raises(DensityError):
            predict(single_track_density(), motion, None, params)

    def test_birth_label_collision_rejected(self):
        motion = MotionModel.constant_velocity(1.0, 5.0)
        birth = BirthModel((BirthSite(0, 0.1, np.zeros(4), np.eye(4)),))
        with pytest.raises(DensityError):
            predict(single_track_density(TrackLabel(5, 0)), motion, birth, LOOSE,
                    time=5)

    def test_truncation_keeps_heaviest(self):
        motion = MotionModel.constant_velocity(1.0, 5.0, survival_probability=0.98)
        params = FilterParams(max_hypotheses=1, hypothesis_weight_floor=0.05)
        predicted = predict(single_track_density(), motion, None, params)
        assert len(predicted.hypotheses) == 1
        assert predicted.hypotheses[0].labels == frozenset([L0])
        assert predicted.hypotheses[0].weight == pytest.approx(1.0)

    def test_truncation_retains_best_of_each_label_set_above_floor(self):
        motion = MotionModel.constant_velocity(1.0, 5.0, survival_probability=0.98)
        params = FilterParams(max_hypotheses=1, hypothesis_weight_floor=1e-3)
        predicted = predict(single_track_density(), motion, None, params)
        got = weights_by_labels(predicted)
        # the cap is 1, but the empty set clears the floor so its best
        # hypothesis rides along to keep the label-set family intact
        assert set(got) == {frozenset([L0]), frozenset()}
        assert got[frozenset([L0])] == pytest.approx(0.98)
        assert got[frozenset()] == pytest.approx(0.02)


class TestUpdate:
    def test_empty_scan_preserves_moments_and_normalization(self):
        sensor = toy_sensor()
        motion = MotionModel.constant_velocity(1.0, 5.0)
        predicted = predict(single_track_density(), motion, None, LOOSE)
        posterior = update(predicted, np.zeros((0, 2)), sensor, LOOSE)
        assert logsumexp([h.log_weight for h in posterior.hypotheses]) == pytest.approx(0.0, abs=1e-9)
        before = predicted.track_table[(0, L0)].components[0]
        key = [k for k in posterior.track_table if k[1] == L0][0]
        after = posterior.track_table[key].components[0]
        assert after.mean == pytest.approx(before.mean)
        assert np.allclose(after.cov, before.cov)

    def test_noiseless_measurement_shrinks_covariance(self):
        sensor = toy_sensor(clutter_rate=0.0)
        prior = single_track_density(sigmas=(60.0, 8.0, 60.0, 8.0))
        mix = prior.track_table[(0, L0)]
        z = sensor.measurement_of(mix.components[0].mean)
        posterior = update(prior, [z], sensor, LOOSE)
        best = max(posterior.hypotheses, key=lambda h: h.log_weight)
        post = posterior.track_table[(best.assoc_history, L0)].components[0]
        assert np.trace(post.cov) < np.trace(mix.components[0].cov)
        # measurement taken at the predicted mean: the posterior mean stays
        # essentially put (the unscented second-order correction moves it by
        # well under the position spread)
        shift = np.hypot(*(post.mean[[0, 2]] - mix.components[0].mean[[0, 2]]))
        assert shift < 3.0
        post_z = sensor.measurement_of(post.mean)
        prior_z = sensor.measurement_of(mix.components[0].mean)
        assert abs(post_z[1] - z[1]) <= abs(prior_z[1] - z[1]) + 3.0

    def test_unscented_update_matches_linearized_oracle(self):
        sensor = toy_sensor(clutter_rate=0.0)
        prior = single_track_density(sigmas=(40.0, 8.0, 40.0, 8.0))
        comp = prior.track_table[(0, L0)].components[0]
        z = sensor.measurement_of(comp.mean) + np.array([0.01, 25.0])
        posterior = update(prior, [z], sensor, LOOSE)
        best = max(posterior.hypotheses, key=lambda h: h.log_weight)
        post = posterior.track_table[(best.assoc_history, L0)].components[0]
        ekf_mean, ekf_cov, _ = ekf_polar_update(comp.mean, comp.cov, z, sensor)
        assert post.mean == pytest.approx(ekf_mean, rel=1e-3, abs=0.5)
        assert np.allclose(post.cov, ekf_cov, rtol=5e-3, atol=1.0)

    def test_two_tracks_consistent_assignment_dominates(self):
        mix0 = LabeledGaussianMixture.single(L0, np.array([600.0, 0, 0.0, 0]),
                                             np.diag([50.0**2, 8**2, 50.0**2, 8**2]))
        mix1 = LabeledGaussianMixture.single(L1, np.array([-600.0, 0, 300.0, 0]),
                                             np.diag([50.0**2, 8**2, 50.0**2, 8**2]))
        hyp = GlmbHypothesis(frozenset([L0, L1]), 0, 0.0)
        predicted = DeltaGlmbDensity((hyp,), {(0, L0): mix0, (0, L1): mix1})
        sensor = toy_sensor(clutter_rate=1.0)
        scan = np.array([sensor.measurement_of(mix0.components[0].mean),
                         sensor.measurement_of(mix1.components[0].mean)])
        posterior = update(predicted, scan, sensor, LOOSE)
        best = max(posterior.hypotheses, key=lambda h: h.log_weight)
        assert best.weight > 0.99
        post0 = posterior.track_table[(best.assoc_history, L0)].components[0]
        assert post0.mean[[0, 2]] == pytest.approx([600.0, 0.0], abs=15.0)

    def test_matches_exhaustive_enumeration(self):
        rng = np.random.default_rng(77)
        sensor = toy_sensor()
        for n_tracks, n_meas in [(1, 0), (1, 1), (2, 1), (2, 2), (3, 3)]:
            predicted = random_delta_glmb(rng, n_tracks)
            states = rng.uniform(-600, 600, size=(n_meas, 4))
            scan = np.array([sensor.measurement_of(s) for s in states]) \
                if n_meas else np.zeros((0, 2))
            posterior = update(predicted, scan, sensor, LOOSE)
            oracle = exhaustive_update_weights(predicted, scan, sensor)
            logs = np.array([lw for _, _, lw in oracle])
            want = np.sort(np.exp(logs - logsumexp(logs)))
            got = np.sort([h.weight for h in posterior.hypotheses])
            assert len(got) == len(want)
            assert got == pytest.approx(want, rel=1e-9)

    def test_all_zero_likelihood_falls_back_to_miss(self):
        # detection probability numerically one plus an empty scan zeroes
        # every association weight; the update must fall back to the
        # missed-detection hypotheses with a warning instead of dying
        mix = LabeledGaussianMixture.single(L0, np.array([500.0, 0, 0.0, 0]),
                                            np.diag([50.0, 1.0, 50.0, 1.0]))
        hyp = GlmbHypothesis(frozenset([L0]), 0, 0.0)
        predicted = DeltaGlmbDensity((hyp,), {(0, L0): mix})
        sensor = SensorModel(position=np.array([0.0, 0.0]), region=Region(),
                             clutter_rate=0.0, detection_sigma_m=1e15)
        with pytest.warns(AssociationDegenerateWarning):
            posterior = update(predicted, np.zeros((0, 2)), sensor, LOOSE)
        assert posterior.hypotheses[0].weight == pytest.approx(1.0)
        assert posterior.hypotheses[0].labels == frozenset([L0])


class TestSummaries:
    def test_marginalize_single_hypothesis_identity(self):
        density = single_track_density()
        marginal = marginalize_to_mdglmb(density)
        assert set(marginal.entries) == {frozenset([L0])}
        entry = marginal.entries[frozenset([L0])]
        assert entry.weight == pytest.approx(1.0)

    def test_marginalize_mixes_same_label_set(self):
        mix_a = LabeledGaussianMixture.single(L0, np.zeros(4), np.eye(4))
        mix_b = LabeledGaussianMixture.single(L0, np.ones(4), np.eye(4))
        density = DeltaGlmbDensity.from_unnormalized(
            [(frozenset([L0]), 0, math.log(0.6)), (frozenset([L0]), 1, math.log(0.4))],
            {(0, L0): mix_a, (1, L0): mix_b})
        marginal = marginalize_to_mdglmb(density)
        entry = marginal.entries[frozenset([L0])]
        assert entry.weight == pytest.approx(1.0)
        assert sorted(c.weight for c in entry.tracks[L0].components) == \
            pytest.approx([0.4, 0.6])

    def test_marginalize_groups_weights(self):
        mix = LabeledGaussianMixture.single(L0, np.zeros(4), np.eye(4))
        density = DeltaGlmbDensity.from_unnormalized(
            [(frozenset([L0]), 0, math.log(0.3)),
             (frozenset([L0]), 1, math.log(0.2)),
             (frozenset(), 2, math.log(0.5))],
            {(0, L0): mix, (1, L0): mix})
        marginal = marginalize_to_mdglmb(density)
        assert len(marginal.entries) == 2
        assert marginal.entries[frozenset([L0])].weight == pytest.approx(0.5)
        assert marginal.entries[frozenset()].weight == pytest.approx(0.5)

    def test_marginalize_preserves_cardinality_distribution(self):
        rng = np.random.default_rng(5)
        density = random_delta_glmb(rng, 3)
        marginal = marginalize_to_mdglmb(density)
        assert marginal.cardinality_distribution() == pytest.approx(
            density.cardinality_distribution(), abs=1e-12)

    def test_convert_to_lmb_existence(self):
        mix = LabeledGaussianMixture.single(L0, np.zeros(4), np.eye(4))
        density = DeltaGlmbDensity.from_unnormalized(
            [(frozenset([L0]), 0, math.log(0.7)), (frozenset(), 1, math.log(0.3))],
            {(0, L0): mix})
        lmb = convert_to_lmb(density)
        assert lmb.tracks[L0].existence == pytest.approx(0.7)

    def test_convert_to_lmb_certain_track(self):
        mix = LabeledGaussianMixture.single(L0, np.zeros(4), np.eye(4))
        other = LabeledGaussianMixture.single(L1, np.ones(4), np.eye(4))
        density = DeltaGlmbDensity.from_unnormalized(
            [(frozenset([L0, L1]), 0, math.log(0.4)),
             (frozenset([L0]), 1, math.log(0.6))],
            {(0, L0): mix, (0, L1): other, (1, L0): mix})
        lmb = convert_to_lmb(density)
        assert lmb.tracks[L0].existence == pytest.approx(1.0)
        assert lmb.tracks[L1].existence == pytest.approx(0.4)

    def test_convert_to_lmb_matches_membership_sums(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            density = random_delta_glmb(rng, 3)
            lmb = convert_to_lmb(density)
            for lbl, track in lmb.sorted_items():
                brute = sum(h.weight for h in density.hypotheses if lbl in h.labels)
                assert track.existence == pytest.approx(min(brute, 1.0), abs=1e-12)

    def test_map_estimate_single_entry(self):
        marginal = marginalize_to_mdglmb(single_track_density())
        estimate = map_estimate(marginal)
        assert len(estimate) == 1
        assert estimate[0][0] == L0
        assert estimate[0][1].px == pytest.approx(500.0)

    def test_map_estimate_prefers_empty(self):
        mix = LabeledGaussianMixture.single(L0, np.zeros(4), np.eye(4))
        marginal = MDeltaGlmbDensity.from_unnormalized({
            frozenset(): (math.log(0.6), {}),
            frozenset([L0]): (math.log(0.4), {L0: mix}),
        })
        assert map_estimate(marginal) == []

    def test_map_estimate_cardinality_then_label_tie_break(self):
        mix0 = LabeledGaussianMixture.single(L0, np.zeros(4), np.eye(4))
        mix1 = LabeledGaussianMixture.single(L1, np.ones(4), np.eye(4))
        marginal = MDeltaGlmbDensity.from_unnormalized({
            frozenset([L0]): (math.log(0.3), {L0: mix0}),
            frozenset([L1]): (math.log(0.3), {L1: mix1}),
            frozenset(): (math.log(0.4), {}),
        })
        estimate = map_estimate(marginal)
        assert [lbl for lbl, _ in estimate] == [L0]


class TestDensityTools:
    def test_truncate_density(self):
        density = DeltaGlmbDensity.from_unnormalized(
            [(frozenset(), 0, math.log(0.9)), (frozenset(), 1, math.log(0.1))], {})
        params = FilterParams(max_hypotheses=1, hypothesis_weight_floor=0.0)
        cut = truncate_density(density, params)
        assert len(cut.hypotheses) == 1
        assert cut.hypotheses[0].weight == pytest.approx(1.0)

    def test_restrict_to_label_sets(self):
        density = DeltaGlmbDensity.from_unnormalized(
            [(frozenset([L0]), 0, math.log(0.5)), (frozenset(), 1, math.log(0.5))],
            {(0, L0): LabeledGaussianMixture.single(L0, np.zeros(4), np.eye(4))})
        restricted = restrict_to_label_sets(density, [frozenset([L0])])
        assert len(restricted.hypotheses) == 1
        assert restricted.hypotheses[0].weight == pytest.approx(1.0)
        # no overlap: falls back to the input untouched
        same = restrict_to_label_sets(density, [frozenset([L1])])
        assert len(same.hypotheses) == 2

    def test_ukf_terms_consistent_with_ekf_at_small_spread(self):
        sensor = toy_sensor()
        mean = np.array([700.0, 3.0, -250.0, 1.0])
        cov = np.diag([20.0**2, 4.0**2, 20.0**2, 4.0**2])
        moments = ukf_polar_terms(mean, cov, sensor)
        _, _, log_like = ekf_polar_update(mean, cov,
                                          sensor.measurement_of(mean), sensor)
        own = moments.log_likelihoods(sensor.measurement_of(mean).reshape(1, 2))[0]
        assert own == pytest.approx(log_like, rel=1e-3)
