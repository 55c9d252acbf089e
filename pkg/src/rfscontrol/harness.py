"""Seeded Monte Carlo experiment runner.

One run simulates the world scan by scan: each sensor's local filter
predicts and updates, the marginalized posteriors fuse, the fused density
yields the MAP estimate scored by OSPA, and at decision scans the selected
strategy (random / idm / jdm) picks course changes for the sensor platforms.

Reproducibility: every random draw is tied to a named numpy SeedSequence
derived from (base seed, run index[, strategy]), so results are identical
across repeated invocations and across worker counts.  Wall-clock timings
are kept out of the deterministic outputs.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig
from .control import ControlModels, idm_select, jdm_select
from .core import DeltaGlmbDensity, MDeltaGlmbDensity, reduce_mixture
from .filter import (
    BirthModel,
    FilterParams,
    MotionModel,
    map_estimate,
    marginalize_to_mdglmb,
    predict,
    restrict_to_label_sets,
    truncate_density,
    update,
)
from .fusion import FusionWeights, fuse_mdglmb
from .metrics import ospa
from .world import GroundTruth, apply_action, measure, propagate_targets

__all__ = [
    "STRATEGIES",
    "FilterBank",
    "ScanRecord",
    "RunResult",
    "ExperimentResult",
    "run_scan_cycle",
    "run_single",
    "run_experiment",
    "run_compare",
    "write_results_csv",
    "write_rewards_json",
    "write_summary_json",
    "write_world_csv",
]

STRATEGIES = ("random", "idm", "jdm")

# Stream ids for per-run SeedSequence children.
_STREAM_TRUTH = 101
_STREAM_SENSOR = 200
_STREAM_CONTROL = 300


@dataclass(frozen=True)
class FilterBank:
    """The per-scan filtering pipeline shared by every strategy."""

    motion: MotionModel
    birth: BirthModel
    params: FilterParams
    weights: FusionWeights
    birth_scans: frozenset = frozenset({1})


def run_scan_cycle(bank: FilterBank, locals_, measurements, sensors, scan: int):
    """Advance every local filter one scan, fuse, and extract the MAP estimate.

    Returns (new local densities, fused marginalized density, estimate).
    """
    new_locals = []
    marginals = []
    birth = bank.birth if scan in bank.birth_scans else None
    for local, meas, sensor in zip(locals_, measurements, sensors):
        predicted = predict(local, bank.motion, birth, bank.params, time=scan)
        posterior = update(predicted, meas, sensor, bank.params)
        new_locals.append(posterior)
        marginals.append(marginalize_to_mdglmb(
            posterior, max_components=bank.params.max_components_per_track))
    fused = fuse_mdglmb(marginals, bank.weights)
    estimate = map_estimate(fused)
    return new_locals, fused, estimate


@dataclass
class ScanRecord:
    scan: int
    ospa: float
    n_true: int
    n_est: int
    actions: tuple | None = None  # set at decision scans


@dataclass
class RunResult:
    run: int
    records: list = field(default_factory=list)
    rewards: dict = field(default_factory=dict)  # scan -> reward table
    world: list = field(default_factory=list)    # filled when log_world is set
    error: str | None = None
    elapsed_s: float = 0.0


@dataclass
class ExperimentResult:
    strategy: str
    runs: list = field(default_factory=list)

    def ok_runs(self) -> list:
        return [r for r in self.runs if r.error is None]

    def failed_runs(self) -> list:
        return [r for r in self.runs if r.error is not None]

    def ospa_matrix(self) -> np.ndarray:
        """(n_ok_runs, n_scans) OSPA values."""
        ok = self.ok_runs()
        if not ok:
            return np.zeros((0, 0))
        return np.array([[rec.ospa for rec in run.records] for run in ok])


def _entropy(base_seed: int, run: int, strategy: str, paired: bool) -> tuple:
    if paired:
        return (int(base_seed), int(run))
    return (int(base_seed), int(run), STRATEGIES.index(strategy))


def _rng(entropy: tuple, *stream) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy + stream))


def _reduced_marginal(density: MDeltaGlmbDensity, params: FilterParams) -> MDeltaGlmbDensity:
    """Shrink per-track mixtures of an already marginalized density."""
    raw = {}
    for labels, entry in density.sorted_items():
        tracks = {}
        for lbl, mixture in sorted(entry.tracks.items()):
            if len(mixture.components) > params.max_components_per_track:
                mixture = reduce_mixture(mixture, params.max_components_per_track,
                                         params.merge_mahalanobis)
            tracks[lbl] = mixture
        raw[labels] = (entry.log_weight, tracks)
    return MDeltaGlmbDensity.from_unnormalized(raw)


def _decide(strategy: str, config: ScenarioConfig, fused, locals_, sensors,
            scan: int, entropy: tuple):
    """Pick one action per sensor at a decision scan."""
    grid = config.build_action_grid()
    if strategy == "random":
        rng = _rng(entropy, _STREAM_CONTROL, scan)
        actions = tuple(float(rng.choice(actions_i))
                        for actions_i in grid.per_sensor_sets)
        return actions, {"chosen": list(actions)}

    cfg = config.build_control_config()
    params = config.build_control_filter_params()
    models = ControlModels(config.build_control_motion(), tuple(sensors), params)
    control_fused = _reduced_marginal(fused, params)
    # Keep every sensor's chain on the fused support so the joint rewards
    # stay finite (each sensor has positive weight on every fused label set).
    truncated = [truncate_density(restrict_to_label_sets(d, fused.entries), params)
                 for d in locals_]
    seed = np.random.SeedSequence(entropy + (_STREAM_CONTROL, scan)).generate_state(1)[0]
    selector = jdm_select if strategy == "jdm" else idm_select
    decision = selector(control_fused, truncated, grid, cfg, models, int(seed),
                        fusion_weights=config.build_fusion_weights())
    table = {
        "chosen": list(decision.actions),
        "pseudo_update_chains": decision.pseudo_update_chains,
        "reward_evaluations": decision.reward_evaluations,
        "fallback": decision.fallback,
        "expected_rewards": _reward_table(decision.expected_rewards),
    }
    return decision.actions, table


def _reward_table(expected: dict) -> dict:
    """JSON-friendly reward table; keys become 'a1,a2' strings."""
    out = {}
    for key in sorted(expected):
        value = expected[key]
        if isinstance(value, dict):  # idm: per-sensor tables
            out[str(key)] = {f"{a:g}": _json_float(v) for a, v in sorted(value.items())}
        else:
            name = ",".join(f"{a:g}" for a in key)
            out[name] = _json_float(value)
    return out


def _json_float(value: float):
    if value == -math.inf:
        return "excluded"
    return float(value)


def run_single(config: ScenarioConfig, strategy: str, base_seed: int, run: int,
               paired: bool = False, log_world: bool = False) -> RunResult:
    """Simulate one seeded run of one strategy."""
    start = time.perf_counter()
    result = RunResult(run=run)
    world_log = result.world if log_world else None
    entropy = _entropy(base_seed, run, strategy, paired)
    try:
        motion = config.build_motion()
        bank = FilterBank(motion, config.build_birth(),
                          config.build_filter_params(),
                          config.build_fusion_weights(),
                          config.birth_scans())
        sensors = config.build_sensors()
        ospa_params = config.build_ospa_params()
        truth = GroundTruth(config.build_targets())
        decision_scans = set(config.schedule["decision_scans"])
        num_scans = config.schedule["num_scans"]

        truth_rng = _rng(entropy, _STREAM_TRUTH)
        sensor_rngs = [_rng(entropy, _STREAM_SENSOR + i)
                       for i in range(len(sensors))]
        locals_ = [DeltaGlmbDensity.empty() for _ in sensors]
        moving = [False] * len(sensors)

        for scan in range(1, num_scans + 1):
            sensors = [s.moved(motion.dt) if moving[i] else s
                       for i, s in enumerate(sensors)]
            propagate_targets(truth, motion, truth_rng)
            truth.record_sensors(scan, sensors)
            alive = truth.alive(scan)
            scans = [measure(alive, sensor, rng)
                     for sensor, rng in zip(sensors, sensor_rngs)]
            if world_log is not None:
                _log_world(world_log, run, scan, alive, scans)
            locals_, fused, estimate = run_scan_cycle(
                bank, locals_, [m.values for m in scans], sensors, scan)
            est_positions = np.array([[s.px, s.py] for _, s in estimate]) \
                if estimate else np.zeros((0, 2))
            value = ospa(est_positions, truth.positions(scan), ospa_params)
            record = ScanRecord(scan, value, len(alive), len(estimate))
            if scan in decision_scans:
                actions, table = _decide(strategy, config, fused, locals_,
                                         sensors, scan, entropy)
                sensors = [apply_action(s, a) for s, a in zip(sensors, actions)]
                moving = [True] * len(sensors)
                record.actions = actions
                result.rewards[scan] = table
            result.records.append(record)
    except Exception as exc:  # noqa: BLE001 - failures are recorded, never dropped
        result.error = f"{type(exc).__name__}: {exc}"
    result.elapsed_s = time.perf_counter() - start
    return result


def _log_world(log: list, run: int, scan: int, alive, scans) -> None:
    for label, state in alive:
        log.append({"run": run, "scan": scan, "kind": "truth", "sensor": "",
                    "label": f"{label.birth_time}.{label.birth_index}",
                    "px_m": float(state[0]), "py_m": float(state[2]),
                    "bearing_rad": "", "range_m": ""})
    for sensor_idx, meas in enumerate(scans):
        for row, origin in zip(meas.values, meas.origins):
            kind = "clutter" if origin < 0 else "meas"
            log.append({"run": run, "scan": scan, "kind": kind,
                        "sensor": sensor_idx, "label": "",
                        "px_m": "", "py_m": "",
                        "bearing_rad": float(row[0]), "range_m": float(row[1])})


def _run_single_job(args):
    return run_single(*args)


def run_experiment(config: ScenarioConfig, strategy: str, runs: int,
                   base_seed: int, threads: int = 1, paired: bool = False,
                   log_world: bool = False) -> ExperimentResult:
    """Independent seeded Monte Carlo runs of one strategy."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    config.validate()
    jobs = [(config, strategy, base_seed, run, paired, log_world)
            for run in range(runs)]
    if threads <= 1:
        results = [_run_single_job(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_single_job, jobs))
    results.sort(key=lambda r: r.run)
    return ExperimentResult(strategy=strategy, runs=results)


def run_compare(config: ScenarioConfig, runs: int, base_seed: int,
                threads: int = 1, paired: bool | None = None) -> list:
    """All three strategies on the same run grid."""
    if paired is None:
        paired = bool(config.seed_policy.get("paired_noise", False))
    return [run_experiment(config, strategy, runs, base_seed, threads, paired)
            for strategy in STRATEGIES]


# ---- persistence ------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results_csv(path, experiments, n_sensors: int) -> None:
    """One row per (strategy, run, scan); action columns filled at decisions."""
    action_cols = [f"s{i}_action_deg" for i in range(n_sensors)]
    header = ["strategy", "run", "scan", "ospa_m",
              "cardinality_true", "cardinality_est"] + action_cols
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for experiment in experiments:
            for run in experiment.ok_runs():
                for rec in run.records:
                    actions = ["" for _ in range(n_sensors)] if rec.actions is None \
                        else [_fmt(float(a)) for a in rec.actions]
                    writer.writerow([experiment.strategy, run.run, rec.scan,
                                     _fmt(rec.ospa), rec.n_true, rec.n_est]
                                    + actions)


def write_rewards_json(path, experiments) -> None:
    import json

    payload = {}
    for experiment in experiments:
        strat = {}
        for run in experiment.ok_runs():
            if run.rewards:
                strat[str(run.run)] = {str(scan): table
                                       for scan, table in sorted(run.rewards.items())}
        payload[experiment.strategy] = strat
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def summarize(config: ScenarioConfig, experiments, base_seed: int,
              paired: bool) -> dict:
    summary = {
        "base_seed": int(base_seed),
        "paired_noise": bool(paired),
        "ospa": dict(config.ospa),
        "num_scans": config.schedule["num_scans"],
        "strategies": {},
    }
    for experiment in experiments:
        matrix = experiment.ospa_matrix()
        entry = {
            "runs_ok": len(experiment.ok_runs()),
            "runs_failed": len(experiment.failed_runs()),
            "failures": [{"run": r.run, "error": r.error}
                         for r in experiment.failed_runs()],
        }
        if matrix.size:
            entry["mean_ospa_per_scan"] = [float(v) for v in matrix.mean(axis=0)]
            entry["std_ospa_per_scan"] = [float(v) for v in matrix.std(axis=0)]
            entry["mean_ospa_overall"] = float(matrix.mean())
        summary["strategies"][experiment.strategy] = entry
    return summary


def write_summary_json(path, summary: dict) -> None:
    import json

    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_timing_json(path, experiments) -> None:
    import json

    payload = {e.strategy: {str(r.run): r.elapsed_s for r in e.runs}
               for e in experiments}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_world_csv(path, world_log) -> None:
    header = ["run", "scan", "kind", "sensor", "label",
              "px_m", "py_m", "bearing_rad", "range_m"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in world_log:
            writer.writerow([_fmt(row[name]) if isinstance(row[name], float)
                             else row[name] for name in header])
