"""Scenario configuration: a JSON-serializable description of an experiment.

Field names carry units (meters, seconds, degrees) so config files are
self-describing.  The default scenario is a 4-target / 2-sensor setup on a
[-2000, 2000]^2 m region: scans at 1 s for 40 s, sensors stationary until
the first decision at 10 s, further decisions at 20 s and 30 s, 13 candidate
course changes per sensor in 30-degree steps.  Target tracks and sensor
start poses are reconstructed plausibly rather than copied from anywhere;
treat them as example data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .control import ControlActionGrid, ControlConfig
from .core import TrackLabel
from .filter import BirthModel, BirthSite, FilterParams, MotionModel
from .fusion import FusionWeights
from .metrics import OspaParams
from .world import Region, SensorModel, TargetSchedule

__all__ = ["ScenarioConfig", "default_scenario"]

FULL_TURN_ACTIONS = tuple(float(a) for a in range(-180, 181, 30))


@dataclass
class ScenarioConfig:
    """Everything a seeded experiment run needs, as plain JSON-able values."""

    region_m: dict = field(default_factory=lambda: {
        "x_min": -2000.0, "x_max": 2000.0, "y_min": -2000.0, "y_max": 2000.0})
    motion: dict = field(default_factory=lambda: {
        "sampling_period_s": 1.0, "accel_noise_mps2": 5.0,
        "survival_probability": 0.98})
    birth: dict = field(default_factory=lambda: {
        "existence_probability": 0.03, "position_sigma_m": 50.0,
        "velocity_sigma_mps": 25.0, "sites_m": []})
    targets: list = field(default_factory=list)
    sensors: list = field(default_factory=list)
    filter: dict = field(default_factory=lambda: {
        "max_hypotheses": 1000, "hypothesis_weight_floor": 1e-5,
        "max_components_per_track": 5})
    control: dict = field(default_factory=lambda: {
        "horizon_steps": 5, "step_period_s": 2.0, "num_samples": 40,
        "unit_hypervolume": 1.0, "pseudo_update_survival": True,
        "action_set_deg": list(FULL_TURN_ACTIONS),
        "filter": {"max_hypotheses": 2, "hypothesis_weight_floor": 1e-3,
                   "max_components_per_track": 1}})
    schedule: dict = field(default_factory=lambda: {
        "num_scans": 40, "decision_scans": [10, 20, 30], "birth_scans": [1]})
    ospa: dict = field(default_factory=lambda: {"cutoff_m": 100.0, "order": 2.0})
    seed_policy: dict = field(default_factory=lambda: {"paired_noise": False})

    def validate(self) -> None:
        if not self.sensors:
            raise ValueError("scenario needs at least one sensor")
        weights = [s.get("fusion_weight", 1.0 / len(self.sensors))
                   for s in self.sensors]
        if abs(math.fsum(weights) - 1.0) > 1e-9:
            raise ValueError("sensor fusion weights must sum to 1")
        n_scans = self.schedule["num_scans"]
        for scan in self.schedule["decision_scans"]:
            if not 1 <= scan <= n_scans:
                raise ValueError(f"decision scan {scan} outside 1..{n_scans}")
        for scan in self.schedule.get("birth_scans", [1]):
            if not 1 <= scan <= n_scans:
                raise ValueError(f"birth scan {scan} outside 1..{n_scans}")

    def birth_scans(self) -> frozenset:
        """Scans at which the filters hypothesize new tracks.

        Defaults to scan 1 only: every scheduled target pre-exists, and a
        shared, consistent label space across sensors is what makes the
        strict GCI label-set product meaningful.
        """
        return frozenset(self.schedule.get("birth_scans", [1]))

    # ---- domain object builders -------------------------------------------------

    def build_region(self) -> Region:
        r = self.region_m
        return Region(r["x_min"], r["x_max"], r["y_min"], r["y_max"])

    def build_motion(self) -> MotionModel:
        m = self.motion
        return MotionModel.constant_velocity(
            m["sampling_period_s"], m["accel_noise_mps2"], m["survival_probability"])

    def build_control_motion(self) -> MotionModel:
        m = self.motion
        return MotionModel.constant_velocity(
            self.control["step_period_s"], m["accel_noise_mps2"],
            m["survival_probability"])

    def build_birth(self) -> BirthModel:
        b = self.birth
        pos_var = b["position_sigma_m"] ** 2
        vel_var = b["velocity_sigma_mps"] ** 2
        cov = [[pos_var, 0, 0, 0], [0, vel_var, 0, 0],
               [0, 0, pos_var, 0], [0, 0, 0, vel_var]]
        sites = [BirthSite(i, b["existence_probability"],
                           [x, 0.0, y, 0.0], cov)
                 for i, (x, y) in enumerate(b["sites_m"])]
        return BirthModel(tuple(sites))

    def build_targets(self) -> tuple:
        out = []
        for i, t in enumerate(self.targets):
            out.append(TargetSchedule(TrackLabel(-1, i), t["birth_scan"],
                                      t["death_scan"], t["state"]))
        return tuple(out)

    def build_sensors(self) -> list:
        region = self.build_region()
        out = []
        for s in self.sensors:
            out.append(SensorModel(
                position=s["position_m"],
                heading_deg=s["heading_deg"],
                speed_mps=s["speed_mps"],
                range_noise_floor_m=s["range_noise_floor_m"],
                range_noise_quadratic=s["range_noise_quadratic_per_m"],
                bearing_noise_floor_rad=s["bearing_noise_floor_rad"],
                bearing_noise_linear=s["bearing_noise_linear_rad_per_m"],
                detection_sigma_m=s["detection_sigma_m"],
                clutter_rate=s["clutter_rate"],
                region=region))
        return out

    def build_fusion_weights(self) -> FusionWeights:
        default = 1.0 / len(self.sensors)
        return FusionWeights(tuple(s.get("fusion_weight", default)
                                   for s in self.sensors))

    def build_filter_params(self) -> FilterParams:
        f = self.filter
        return FilterParams(f["max_hypotheses"], f["hypothesis_weight_floor"],
                            f["max_components_per_track"])

    def build_control_filter_params(self) -> FilterParams:
        f = self.control["filter"]
        return FilterParams(f["max_hypotheses"], f["hypothesis_weight_floor"],
                            f["max_components_per_track"],
                            keep_best_per_label_set=False)

    def build_control_config(self) -> ControlConfig:
        c = self.control
        return ControlConfig(c["horizon_steps"], c["step_period_s"],
                             c["num_samples"], c["unit_hypervolume"],
                             c["pseudo_update_survival"])

    def build_action_grid(self) -> ControlActionGrid:
        actions = self.control["action_set_deg"]
        return ControlActionGrid.uniform(len(self.sensors), actions)

    def build_ospa_params(self) -> OspaParams:
        return OspaParams(self.ospa["cutoff_m"], self.ospa["order"])

    # ---- JSON round trip --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "region_m": dict(self.region_m),
            "motion": dict(self.motion),
            "birth": {**self.birth, "sites_m": [list(s) for s in self.birth["sites_m"]]},
            "targets": [dict(t) for t in self.targets],
            "sensors": [dict(s) for s in self.sensors],
            "filter": dict(self.filter),
            "control": {**self.control, "filter": dict(self.control["filter"]),
                        "action_set_deg": list(self.control["action_set_deg"])},
            "schedule": dict(self.schedule),
            "ospa": dict(self.ospa),
            "seed_policy": dict(self.seed_policy),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        cfg = cls(**{k: data[k] for k in data})
        cfg.validate()
        return cfg

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _sensor_entry(x: float, y: float, weight: float) -> dict:
    return {
        "position_m": [x, y],
        "heading_deg": 90.0,
        "speed_mps": 25.0,
        "range_noise_floor_m": 10.0,
        "range_noise_quadratic_per_m": 5e-5,
        "bearing_noise_floor_rad": math.pi / 180.0,
        "bearing_noise_linear_rad_per_m": 5e-6,
        "detection_sigma_m": 10000.0,
        "clutter_rate": 25.0,
        "fusion_weight": weight,
    }


def default_scenario() -> ScenarioConfig:
    """4 crossing targets, 2 sensors starting at the bottom corners."""
    starts = [
        [-1500.0, 40.0, 0.0, 15.0],
        [1500.0, -35.0, 400.0, 5.0],
        [-200.0, 10.0, 1500.0, -35.0],
        [-400.0, 25.0, -300.0, 25.0],
    ]
    cfg = ScenarioConfig()
    cfg.targets = [{"birth_scan": 1, "death_scan": 41, "state": list(s)}
                   for s in starts]
    cfg.birth["sites_m"] = [[s[0], s[2]] for s in starts]
    cfg.sensors = [_sensor_entry(-1000.0, -1500.0, 0.5),
                   _sensor_entry(1000.0, -1500.0, 0.5)]
    # Floor below the 4-site joint-birth weight (0.03^4 ~ 8e-7) so the full
    # birth subset survives the first prediction.  The hypothesis budget is
    # generous because association variants of dominant label sets must not
    # crowd out sets whose tracks are recovering from missed detections;
    # losing a label set in one sensor only breaks the fusion intersection.
    cfg.filter = {"max_hypotheses": 150, "hypothesis_weight_floor": 3e-7,
                  "max_components_per_track": 4}
    cfg.validate()
    return cfg
