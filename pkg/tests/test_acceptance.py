"""End-to-end acceptance battery.

One test per criterion, each printing a single PASS line with its headline
numbers (run with ``pytest tests/test_acceptance.py -v -s``).  The Monte
Carlo comparison (criterion 7) dominates the runtime; everything else
finishes in seconds.
"""

import itertools
import math
import time

import numpy as np
import pytest
from scipy import stats as sstats

from rfscontrol.config import default_scenario
from rfscontrol.control import (
    ControlActionGrid,
    ControlConfig,
    ControlModels,
    idm_select,
    jdm_select,
)
from rfscontrol.core import (
    DeltaGlmbDensity,
    GlmbHypothesis,
    LabeledGaussianMixture,
    MDeltaGlmbDensity,
    TrackLabel,
    log_mvnpdf,
    logsumexp,
)
from rfscontrol.divergence import cs_divergence, zeta
from rfscontrol.filter import FilterParams, MotionModel, marginalize_to_mdglmb, update
from rfscontrol.fusion import FusionWeights, fuse_mdglmb, weighted_gm_power_product
from rfscontrol.harness import run_experiment
from rfscontrol.metrics import OspaParams, ospa
from rfscontrol.selfcheck import (
    random_delta_glmb,
    random_mdglmb_1d,
    toy_sensor,
    zeta_oracle,
)
from rfscontrol.validation import (
    exhaustive_update_weights,
    gaussian_pdf_1d,
    quadrature_power_product_1d,
)
from rfscontrol.world import Region, SensorModel, measure

L0 = TrackLabel(0, 0)
L1 = TrackLabel(0, 1)


def report(criterion: int, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"\nACCEPTANCE {criterion}: {status} ({detail})")
    assert ok, f"criterion {criterion}: {detail}"


def test_criterion_1_zeta_closed_form_vs_set_integral_oracle():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        phi = random_mdglmb_1d(rng, max_components=2)
        psi = random_mdglmb_1d(rng, max_components=2)
        closed = zeta(phi, psi)
        brute = zeta_oracle(phi, psi)
        if brute > 0:
            worst = max(worst, abs(closed - brute) / brute)
        else:
            worst = max(worst, abs(closed - brute))
    elapsed = time.perf_counter() - start
    report(1, worst < 1e-3 and elapsed < 60.0,
           f"50 pairs, worst relative error {worst:.2e}, {elapsed:.1f}s")


def test_criterion_2_divergence_axioms():
    rng = np.random.default_rng(7)
    worst_sym = worst_neg = worst_self = 0.0
    for _ in range(1000):
        phi = random_mdglmb_1d(rng)
        psi = random_mdglmb_1d(rng)
        d_pq = cs_divergence(phi, psi)
        d_qp = cs_divergence(psi, phi)
        if math.isfinite(d_pq):
            worst_sym = max(worst_sym, abs(d_pq - d_qp))
            worst_neg = max(worst_neg, -d_pq)
        worst_self = max(worst_self, abs(cs_divergence(phi, phi)))

    # shared-label two-Gaussian case against the derived closed form
    worst_form = 0.0
    for _ in range(20):
        dim = int(rng.choice([1, 4]))
        a = rng.standard_normal((dim, dim))
        cov = a @ a.T + dim * np.eye(dim)
        mu = rng.uniform(-2, 2, size=dim)
        phi = MDeltaGlmbDensity.from_unnormalized(
            {frozenset([L0]): (0.0, {L0: LabeledGaussianMixture.single(
                L0, np.zeros(dim), cov)})})
        psi = MDeltaGlmbDensity.from_unnormalized(
            {frozenset([L0]): (0.0, {L0: LabeledGaussianMixture.single(L0, mu, cov)})})
        derived = -(log_mvnpdf(np.zeros(dim), mu, 2 * cov)
                    - log_mvnpdf(np.zeros(dim), np.zeros(dim), 2 * cov))
        worst_form = max(worst_form, abs(cs_divergence(phi, psi) - derived))

    ok = worst_sym < 1e-12 and worst_neg < 1e-9 and worst_self < 1e-9 \
        and worst_form < 1e-9
    report(2, ok, f"1000 pairs: symmetry {worst_sym:.1e}, negativity "
                  f"{worst_neg:.1e}, self {worst_self:.1e}, derived form "
                  f"{worst_form:.1e}")


def test_criterion_3_gci_correctness():
    rng = np.random.default_rng(11)
    # single-Gaussian information form, randomized, 1-D and 4-D
    worst_info = 0.0
    for _ in range(50):
        dim = int(rng.choice([1, 4]))
        means = [rng.uniform(-3, 3, size=dim) for _ in range(2)]
        covs = []
        for _ in range(2):
            a = rng.standard_normal((dim, dim))
            covs.append(a @ a.T + dim * np.eye(dim))
        w1 = rng.uniform(0.2, 0.8)
        weights = FusionWeights((w1, 1.0 - w1))
        mixes = [LabeledGaussianMixture.single(L0, m, c)
                 for m, c in zip(means, covs)]
        fused, _ = weighted_gm_power_product(mixes, weights)
        info = w1 * np.linalg.inv(covs[0]) + (1 - w1) * np.linalg.inv(covs[1])
        cov_want = np.linalg.inv(info)
        mean_want = cov_want @ (w1 * np.linalg.inv(covs[0]) @ means[0]
                                + (1 - w1) * np.linalg.inv(covs[1]) @ means[1])
        comp = fused.components[0]
        worst_info = max(worst_info,
                         float(np.max(np.abs(comp.cov - cov_want))),
                         float(np.max(np.abs(comp.mean - mean_want))))

    # mixture fusion against 1-D quadrature of the power product
    from rfscontrol.core import GaussianComponent
    mix_a = LabeledGaussianMixture.from_components(
        L0, [GaussianComponent(0.6, [-4.0], [[0.8]]),
             GaussianComponent(0.4, [3.0], [[1.2]])])
    mix_b = LabeledGaussianMixture.from_components(
        L0, [GaussianComponent(0.5, [-3.5], [[1.0]]),
             GaussianComponent(0.5, [2.5], [[0.6]])])
    _, integral = weighted_gm_power_product([mix_a, mix_b], FusionWeights((0.5, 0.5)))
    quad, _, _ = quadrature_power_product_1d(
        [lambda x: 0.6 * gaussian_pdf_1d(x, -4.0, 0.8) + 0.4 * gaussian_pdf_1d(x, 3.0, 1.2),
         lambda x: 0.5 * gaussian_pdf_1d(x, -3.5, 1.0) + 0.5 * gaussian_pdf_1d(x, 2.5, 0.6)],
        (0.5, 0.5), -40, 40)
    mixture_err = abs(integral - quad) / quad

    # idempotence and permutation equivariance
    worst_idem = worst_perm = 0.0
    for _ in range(20):
        density = random_mdglmb_1d(rng, max_components=1)
        fused = fuse_mdglmb([density, density], FusionWeights((0.5, 0.5)))
        for labels, entry in density.sorted_items():
            worst_idem = max(worst_idem,
                             abs(fused.entries[labels].weight - entry.weight))
            for lbl in labels:
                a = fused.entries[labels].tracks[lbl].components[0]
                b = entry.tracks[lbl].components[0]
                worst_idem = max(worst_idem, abs(a.mean[0] - b.mean[0]),
                                 abs(a.cov[0, 0] - b.cov[0, 0]))
        other = random_mdglmb_1d(rng, max_components=1)
        try:
            fwd = fuse_mdglmb([density, other], FusionWeights((0.3, 0.7)))
            bwd = fuse_mdglmb([other, density], FusionWeights((0.7, 0.3)))
        except Exception:
            continue
        for labels, entry in fwd.sorted_items():
            worst_perm = max(worst_perm,
                             abs(entry.weight - bwd.entries[labels].weight))

    ok = worst_info < 1e-9 and mixture_err < 0.05 and worst_idem < 1e-9 \
        and worst_perm < 1e-9
    report(3, ok, f"info form {worst_info:.1e}, mixture vs quadrature "
                  f"{mixture_err:.2%}, idempotence {worst_idem:.1e}, "
                  f"permutation {worst_perm:.1e}")


def test_criterion_4_update_matches_exhaustive_enumeration():
    rng = np.random.default_rng(4)
    params = FilterParams(max_hypotheses=10 ** 6, hypothesis_weight_floor=0.0)
    worst = 0.0
    checked = 0
    for n_tracks, n_meas in itertools.product(range(1, 4), range(0, 4)):
        for clutter in (5.0, 0.0):
            sensor = toy_sensor(clutter_rate=clutter)
            predicted = random_delta_glmb(rng, n_tracks)
            states = rng.uniform(-600, 600, size=(n_meas, 4))
            scan = np.array([sensor.measurement_of(s) for s in states]) \
                if n_meas else np.zeros((0, 2))
            posterior = update(predicted, scan, sensor, params)
            oracle = exhaustive_update_weights(predicted, scan, sensor)
            logs = np.array([lw for _, _, lw in oracle])
            want = np.sort(np.exp(logs - logsumexp(logs)))
            got = np.sort([h.weight for h in posterior.hypotheses])
            assert len(got) == len(want), (n_tracks, n_meas, clutter)
            err = np.max(np.abs(got - want) / np.maximum(want, 1e-300))
            worst = max(worst, float(err))
            checked += 1
    report(4, worst < 1e-9,
           f"{checked} instances up to 3 tracks x 3 measurements, worst "
           f"relative weight error {worst:.2e}")


def test_criterion_5_sensor_model_statistics():
    region = Region()
    sensor = SensorModel(position=np.array([0.0, 0.0]), region=region)
    rng = np.random.default_rng(99)

    # empirical detection frequency vs P_D(r) at three ranges
    worst_pd = 0.0
    n_trials = 10_000
    for r in (2000.0, 8000.0, 12000.0):
        target = [(L0, np.array([r, 0.0, 0.0, 0.0]))]
        quiet = SensorModel(position=np.array([0.0, 0.0]), region=region,
                            clutter_rate=0.0)
        hits = sum(len(measure(target, quiet, rng)) for _ in range(n_trials))
        p_want = quiet.detection_probability(target[0][1])
        bound = 3.0 * math.sqrt(p_want * (1 - p_want) / n_trials)
        worst_pd = max(worst_pd, abs(hits / n_trials - p_want) - bound)

    # clutter count mean over 1e4 scans vs lambda_c = 25
    counts = [len(measure([], sensor, rng)) for _ in range(10_000)]
    clutter_err = abs(np.mean(counts) - 25.0)
    clutter_bound = 3.0 * math.sqrt(25.0 / 10_000)

    # measurement noise sample covariance at fixed geometry
    state = np.array([3000.0, 0.0, 4000.0, 0.0])
    exact = sensor.measurement_of(state)
    sigma_theta, sigma_r = sensor.noise_scales(state)
    quiet = SensorModel(position=np.array([0.0, 0.0]), region=region,
                        clutter_rate=0.0)
    residuals = []
    target = [(L0, state)]
    while len(residuals) < 100_000:
        scan = measure(target, quiet, rng)
        if len(scan):
            residuals.append(scan.values[0] - exact)
    sample_cov = np.cov(np.array(residuals).T)
    rel_theta = abs(sample_cov[0, 0] - sigma_theta ** 2) / sigma_theta ** 2
    rel_r = abs(sample_cov[1, 1] - sigma_r ** 2) / sigma_r ** 2
    rel_cross = abs(sample_cov[0, 1]) / (sigma_theta * sigma_r)

    ok = worst_pd <= 0.0 and clutter_err < clutter_bound \
        and rel_theta < 0.05 and rel_r < 0.05 and rel_cross < 0.05
    report(5, ok, f"P_D within 3-sigma at 3 ranges, clutter mean err "
                  f"{clutter_err:.3f} (bound {clutter_bound:.3f}), noise cov "
                  f"rel err ({rel_theta:.3%}, {rel_r:.3%}), cross {rel_cross:.3%}")


def _instrumented_setup():
    means = [np.array([900.0, 5.0, 300.0, -3.0]),
             np.array([-700.0, -4.0, 500.0, 2.0])]
    cov = np.diag([60.0 ** 2, 8.0 ** 2, 60.0 ** 2, 8.0 ** 2])
    labels = [TrackLabel(1, 0), TrackLabel(1, 1)]
    table = {(0, lbl): LabeledGaussianMixture.single(lbl, mean, cov)
             for lbl, mean in zip(labels, means)}
    hyp = GlmbHypothesis(frozenset(labels), 0, 0.0)
    local = DeltaGlmbDensity((hyp,), table)
    fused = marginalize_to_mdglmb(local)
    region = Region()
    sensors = (SensorModel(position=np.array([-500.0, -900.0]), region=region),
               SensorModel(position=np.array([500.0, -900.0]), region=region))
    params = FilterParams(max_hypotheses=2, hypothesis_weight_floor=1e-3,
                          max_components_per_track=1,
                          keep_best_per_label_set=False)
    cfg = ControlConfig(horizon=1, step_seconds=2.0, num_samples=40,
                        unit_volume=1.0)
    models = ControlModels(MotionModel.constant_velocity(2.0, 5.0), sensors, params)
    grid = ControlActionGrid.uniform(2, tuple(float(a) for a in range(-180, 181, 30)))
    return fused, [local, local], grid, cfg, models


def test_criterion_6_control_cost_accounting():
    fused, locals_, grid, cfg, models = _instrumented_setup()
    assert grid.joint_size() == 169
    idm = idm_select(fused, locals_, grid, cfg, models, rng_seed=0)
    jdm = jdm_select(fused, locals_, grid, cfg, models, rng_seed=0)
    ok = idm.pseudo_update_chains == 1040 \
        and jdm.pseudo_update_chains == 1040 \
        and jdm.fused_reward_evaluations == 169 * 40
    report(6, ok, f"IDM chains {idm.pseudo_update_chains} (want 1040), JDM "
                  f"chains {jdm.pseudo_update_chains} (want 1040), JDM fused "
                  f"reward evaluations {jdm.fused_reward_evaluations} "
                  f"(want {169 * 40})")


@pytest.mark.slow
def test_criterion_7_strategy_ordering_desk_scale():
    runs = 25
    config = default_scenario()
    start = time.perf_counter()
    final10 = {}
    failures = {}
    for strategy in ("random", "idm", "jdm"):
        experiment = run_experiment(config, strategy, runs=runs, base_seed=2026,
                                    threads=1, paired=True)
        matrix = experiment.ospa_matrix()
        by_run = {r.run: np.mean([rec.ospa for rec in r.records][-10:])
                  for r in experiment.ok_runs()}
        final10[strategy] = by_run
        failures[strategy] = len(experiment.failed_runs())
    elapsed = time.perf_counter() - start

    shared = sorted(set(final10["random"]) & set(final10["idm"])
                    & set(final10["jdm"]))
    rnd = np.array([final10["random"][r] for r in shared])
    idm = np.array([final10["idm"][r] for r in shared])
    jdm = np.array([final10["jdm"][r] for r in shared])
    p_jdm = sstats.ttest_rel(jdm, rnd, alternative="less").pvalue
    p_idm = sstats.ttest_rel(idm, rnd, alternative="less").pvalue
    slack_ok = jdm.mean() <= 1.10 * idm.mean()
    ok = p_jdm < 0.05 and p_idm < 0.05 and slack_ok and len(shared) >= 20
    report(7, ok,
           f"{len(shared)} paired runs (failures {failures}); mean final-10 "
           f"OSPA random {rnd.mean():.1f}, idm {idm.mean():.1f}, jdm "
           f"{jdm.mean():.1f} m; one-sided p: jdm<rnd {p_jdm:.4f}, idm<rnd "
           f"{p_idm:.4f}; jdm <= 1.1 idm: {slack_ok}; elapsed {elapsed / 60:.1f} min")


@pytest.mark.slow
def test_criterion_8_cli_determinism(tmp_path):
    import filecmp

    from rfscontrol.cli import main

    cfg = default_scenario()
    cfg.targets = cfg.targets[:2]
    cfg.birth["sites_m"] = cfg.birth["sites_m"][:2]
    cfg.filter = {"max_hypotheses": 25, "hypothesis_weight_floor": 1e-5,
                  "max_components_per_track": 3}
    cfg.control = {**cfg.control, "horizon_steps": 2, "num_samples": 3,
                   "action_set_deg": [-60.0, 0.0, 60.0]}
    cfg.schedule = {"num_scans": 8, "decision_scans": [4], "birth_scans": [1]}
    cfg.validate()
    config_path = tmp_path / "scenario.json"
    cfg.save(config_path)

    outs = [tmp_path / name for name in ("a", "b", "c")]
    for out, threads in zip(outs, (1, 1, 2)):
        code = main(["compare", "--config", str(config_path), "--runs", "5",
                     "--seed", "7", "--out", str(out), "--threads", str(threads)])
        assert code == 0
    identical = True
    for name in ("results.csv", "summary.json", "rewards.json"):
        identical &= filecmp.cmp(outs[0] / name, outs[1] / name, shallow=False)
        identical &= filecmp.cmp(outs[0] / name, outs[2] / name, shallow=False)
    report(8, identical, "compare --runs 5 --seed 7 twice and with --threads 2: "
                         "results.csv, summary.json, rewards.json byte-identical")


def test_criterion_9_ospa_metric_suite():
    rng = np.random.default_rng(12)
    params = OspaParams(100.0, 2.0)

    worst_route = 0.0
    for _ in range(300):
        x = rng.uniform(-400, 400, size=(int(rng.integers(0, 7)), 2))
        y = rng.uniform(-400, 400, size=(int(rng.integers(0, 7)), 2))
        worst_route = max(worst_route, abs(ospa(x, y, params, assignment="enum")
                                           - ospa(x, y, params, assignment="solver")))

    worst_sym = worst_tri = worst_bound = 0.0
    for _ in range(10_000):
        x, y, z = (rng.uniform(-300, 300, size=(int(rng.integers(0, 5)), 2))
                   for _ in range(3))
        dxy = ospa(x, y, params)
        worst_sym = max(worst_sym, abs(dxy - ospa(y, x, params)))
        worst_tri = max(worst_tri, ospa(x, z, params) - (dxy + ospa(y, z, params)))
        worst_bound = max(worst_bound, dxy - params.cutoff)

    boundaries = ospa([], [], params) == 0.0 \
        and ospa([], rng.uniform(-1, 1, (4, 2)), params) == params.cutoff \
        and ospa([[1.0, 1.0]], [[1.0, 1.0]], params) == 0.0

    ok = worst_route < 1e-12 and worst_sym < 1e-12 and worst_tri < 1e-9 \
        and worst_bound <= 1e-12 and boundaries
    report(9, ok, f"route agreement {worst_route:.1e}, symmetry {worst_sym:.1e}, "
                  f"triangle violation {worst_tri:.1e}, boundary cases ok")
