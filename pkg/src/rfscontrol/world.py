"""Ground-truth world: target motion, sensor platforms, measurement generation.

Targets follow a linear-Gaussian constant-velocity model.  Each sensor
reports polar measurements z = [bearing, range] about its own position with
range-dependent noise scales

    sigma_r     = sigma_0 + eta_r * d^2
    sigma_theta = theta_0 + eta_theta * d

and a detection probability that decays with range as a Gaussian ratio,
P_D(d) = exp(-d^2 / (2 sigma_D^2)).  Clutter is Poisson with points drawn
uniformly over the Cartesian surveillance region and converted to polar.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import TrackLabel

__all__ = [
    "Region",
    "SensorModel",
    "TargetSchedule",
    "GroundTruth",
    "MeasurementSet",
    "propagate_targets",
    "measure",
    "apply_action",
    "wrap_angle",
]

logger = logging.getLogger(__name__)

_coincident_warned = False


def wrap_angle(angle):
    """Wrap angles (radians) into [-pi, pi)."""
    return (np.asarray(angle) + np.pi) % (2.0 * np.pi) - np.pi


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangular surveillance region in meters."""

    x_min: float = -2000.0
    x_max: float = 2000.0
    y_min: float = -2000.0
    y_max: float = 2000.0

    def __post_init__(self):
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ValueError("region bounds are empty")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    @property
    def diagonal(self) -> float:
        return math.hypot(self.x_max - self.x_min, self.y_max - self.y_min)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        xs = rng.uniform(self.x_min, self.x_max, size=count)
        ys = rng.uniform(self.y_min, self.y_max, size=count)
        return np.column_stack([xs, ys])


@dataclass(frozen=True)
class SensorModel:
    """A range-bearing sensor on a constant-velocity platform.

    ``max_range`` bounds the polar observation window used by the clutter
    intensity model; by default it is the region diagonal so the whole
    surveillance square stays observable from any interior pose.
    """

    position: np.ndarray
    heading_deg: float = 90.0
    speed_mps: float = 25.0
    range_noise_floor_m: float = 10.0
    range_noise_quadratic: float = 5e-5
    bearing_noise_floor_rad: float = math.pi / 180.0
    bearing_noise_linear: float = 5e-6
    detection_sigma_m: float = 10000.0
    clutter_rate: float = 25.0
    region: Region = field(default_factory=Region)
    max_range: float | None = None

    def __post_init__(self):
        position = np.asarray(self.position, dtype=float).copy()
        if position.shape != (2,):
            raise ValueError("sensor position must be a 2-vector")
        position.setflags(write=False)
        object.__setattr__(self, "position", position)
        for name in ("range_noise_floor_m", "range_noise_quadratic",
                     "bearing_noise_floor_rad", "bearing_noise_linear",
                     "detection_sigma_m", "clutter_rate"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.max_range is None:
            object.__setattr__(self, "max_range", self.region.diagonal)

    @property
    def heading_rad(self) -> float:
        return math.radians(self.heading_deg)

    @property
    def velocity(self) -> np.ndarray:
        return self.speed_mps * np.array([math.cos(self.heading_rad),
                                          math.sin(self.heading_rad)])

    def _offsets(self, states: np.ndarray) -> np.ndarray:
        states = np.atleast_2d(states)
        return states[:, [0, 2]] - self.position

    def measurement_of(self, state: np.ndarray) -> np.ndarray:
        """Noise-free [bearing, range] of a 4-D state."""
        dx, dy = np.asarray(state, dtype=float)[[0, 2]] - self.position
        return np.array([math.atan2(dy, dx), math.hypot(dx, dy)])

    def measurements_of(self, states: np.ndarray) -> np.ndarray:
        """Vectorized noise-free [bearing, range] rows for (n, 4) states."""
        off = self._offsets(states)
        return np.column_stack([np.arctan2(off[:, 1], off[:, 0]),
                                np.hypot(off[:, 0], off[:, 1])])

    def noise_scales_at_range(self, d: float) -> tuple[float, float]:
        """(sigma_theta, sigma_r) at a given target range in meters."""
        sigma_r = self.range_noise_floor_m + self.range_noise_quadratic * d * d
        sigma_theta = self.bearing_noise_floor_rad + self.bearing_noise_linear * d
        return sigma_theta, sigma_r

    def noise_scales(self, state: np.ndarray) -> tuple[float, float]:
        """(sigma_theta, sigma_r) evaluated at a state's range."""
        return self.noise_scales_at_range(self.measurement_of(state)[1])

    def noise_cov(self, state: np.ndarray) -> np.ndarray:
        sigma_theta, sigma_r = self.noise_scales(state)
        return np.diag([sigma_theta ** 2, sigma_r ** 2])

    def detection_probability(self, state: np.ndarray) -> float:
        d = self.measurement_of(state)[1]
        return math.exp(-0.5 * (d / self.detection_sigma_m) ** 2)

    def detection_probabilities(self, states: np.ndarray) -> np.ndarray:
        off = self._offsets(states)
        d2 = np.sum(off ** 2, axis=1)
        return np.exp(-0.5 * d2 / self.detection_sigma_m ** 2)

    @property
    def clutter_intensity(self) -> float:
        """Clutter intensity kappa(z), uniform over the polar window."""
        return self.clutter_rate / (2.0 * math.pi * self.max_range)

    def moved(self, dt: float) -> "SensorModel":
        return replace(self, position=self.position + dt * self.velocity)

    def at(self, position: np.ndarray, heading_deg: float | None = None) -> "SensorModel":
        heading = self.heading_deg if heading_deg is None else heading_deg
        return replace(self, position=np.asarray(position, dtype=float),
                       heading_deg=heading)


def apply_action(sensor: SensorModel, action_deg: float) -> SensorModel:
    """Course change: add the action angle to the platform heading."""
    return replace(sensor, heading_deg=sensor.heading_deg + float(action_deg))


@dataclass(frozen=True)
class TargetSchedule:
    """Birth scan, death scan (exclusive) and initial state of one target."""

    label: TrackLabel
    birth_scan: int
    death_scan: int
    initial_state: np.ndarray

    def __post_init__(self):
        state = np.asarray(self.initial_state, dtype=float).copy()
        if state.shape != (4,):
            raise ValueError("target state must be a 4-vector")
        state.setflags(write=False)
        object.__setattr__(self, "initial_state", state)
        if self.death_scan <= self.birth_scan:
            raise ValueError("death scan must come after birth scan")

    def alive_at(self, scan: int) -> bool:
        return self.birth_scan <= scan < self.death_scan


@dataclass
class GroundTruth:
    """Scan-indexed truth log: target states and sensor poses."""

    schedule: tuple
    states: dict = field(default_factory=dict)        # scan -> [(label, state)]
    sensor_poses: dict = field(default_factory=dict)  # scan -> [(position, heading_deg)]

    @property
    def last_scan(self) -> int | None:
        return max(self.states) if self.states else None

    def alive(self, scan: int) -> list:
        return self.states.get(scan, [])

    def positions(self, scan: int) -> np.ndarray:
        alive = self.alive(scan)
        if not alive:
            return np.zeros((0, 2))
        return np.array([[state[0], state[2]] for _, state in alive])

    def record_sensors(self, scan: int, sensors) -> None:
        self.sensor_poses[scan] = [(np.array(s.position), s.heading_deg)
                                   for s in sensors]


def propagate_targets(truth: GroundTruth, motion, rng: np.random.Generator) -> int:
    """Advance the truth one scan: survivors get process noise, births appear.

    Returns the new scan index.  Deaths and births follow the schedule; the
    very first call populates the initial scan.
    """
    last = truth.last_scan
    scan = 1 if last is None else last + 1
    current = []
    previous = {label: state for label, state in truth.alive(last)} if last is not None else {}
    for target in truth.schedule:
        if not target.alive_at(scan):
            continue
        if target.label in previous:
            mean = motion.transition @ previous[target.label]
            state = rng.multivariate_normal(mean, motion.process_noise,
                                            method="cholesky") \
                if np.any(motion.process_noise) else mean
        else:
            state = target.initial_state
        current.append((target.label, np.asarray(state, dtype=float)))
    truth.states[scan] = current
    return scan


@dataclass(frozen=True)
class MeasurementSet:
    """One sensor scan: polar measurement rows plus their provenance.

    ``origins[i]`` is the index of the generating target in the truth list,
    or -1 for clutter.  Filters must only consume ``values``.
    """

    values: np.ndarray
    origins: np.ndarray

    def __len__(self) -> int:
        return len(self.values)


def measure(targets, sensor: SensorModel, rng: np.random.Generator) -> MeasurementSet:
    """Generate one scan of detections plus clutter for a labeled target set."""
    global _coincident_warned
    rows = []
    origins = []
    for idx, (_, state) in enumerate(targets):
        exact = sensor.measurement_of(state)
        if exact[1] == 0.0:
            if not _coincident_warned:
                logger.warning("target coincident with sensor position; "
                               "displacing by 1e-6 m for bearing")
                _coincident_warned = True
            exact = sensor.measurement_of(state + np.array([1e-6, 0, 0, 0]))
        if rng.uniform() > sensor.detection_probability(state):
            continue
        sigma_theta, sigma_r = sensor.noise_scales(state)
        noise = rng.standard_normal(2) * np.array([sigma_theta, sigma_r])
        z = exact + noise
        z[0] = float(wrap_angle(z[0]))
        rows.append(z)
        origins.append(idx)

    n_clutter = rng.poisson(sensor.clutter_rate)
    if n_clutter:
        points = sensor.region.sample(rng, n_clutter)
        delta = points - sensor.position
        bearings = np.arctan2(delta[:, 1], delta[:, 0])
        ranges = np.hypot(delta[:, 0], delta[:, 1])
        for b, r in zip(bearings, ranges):
            rows.append(np.array([b, r]))
            origins.append(-1)

    if not rows:
        return MeasurementSet(np.zeros((0, 2)), np.zeros(0, dtype=int))
    values = np.array(rows)
    origins_arr = np.array(origins, dtype=int)
    order = rng.permutation(len(values))
    return MeasurementSet(values[order], origins_arr[order])
