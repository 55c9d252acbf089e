"""Core types for labeled random-finite-set densities.

A labeled multi-target state is a finite set of (state, label) pairs with
distinct labels.  This module provides the value types every other module
builds on:

* :class:`TrackLabel` -- (birth time, birth index) track identity,
* :class:`GaussianComponent` / :class:`LabeledGaussianMixture` -- per-track
  spatial densities,
* :class:`DeltaGlmbDensity` -- hypothesis-indexed multi-target density,
* :class:`MDeltaGlmbDensity` -- its marginalized (one entry per label set)
  form, the shape consumed by fusion and by the divergence reward,
* :class:`LmbDensity` -- per-track (existence, density) pairs,

plus the small exact utilities (generalized Kronecker delta, multi-target
exponential, Gaussian pair integral) used throughout.

All types are immutable values after construction.  State dimension is not
hard-coded: the tracking stack uses 4-D planar position/velocity states
(see :class:`KinematicState`) while test oracles use 1-D states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

__all__ = [
    "DensityError",
    "FusionError",
    "NumericalError",
    "BudgetError",
    "TrackLabel",
    "KinematicState",
    "GaussianComponent",
    "LabeledGaussianMixture",
    "GlmbHypothesis",
    "DeltaGlmbDensity",
    "MdglmbEntry",
    "MDeltaGlmbDensity",
    "LmbTrack",
    "LmbDensity",
    "kronecker_delta",
    "multi_target_exponential",
    "gaussian_pair_integral",
    "log_gaussian_pair_integral",
    "ensure_spd",
    "log_mvnpdf",
    "mix_mixtures",
    "reduce_mixture",
    "label_set_sort_key",
]

WEIGHT_TOL = 1e-9

LOG_ZERO = -np.inf


def logsumexp(values) -> float:
    """log(sum(exp(values))) for small 1-D inputs, overhead-free.

    The hypothesis banks here hold tens of weights at most, where a generic
    library routine costs more than the arithmetic itself.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return -np.inf
    top = arr.max()
    if not np.isfinite(top):
        return float(top)
    return float(top + math.log(np.exp(arr - top).sum()))


def logsumexp_rows(matrix: np.ndarray) -> np.ndarray:
    """Column-wise log-sum-exp of a small 2-D array (reduce over axis 0)."""
    top = matrix.max(axis=0)
    safe = np.where(np.isfinite(top), top, 0.0)
    out = safe + np.log(np.exp(matrix - safe).sum(axis=0))
    return np.where(np.isfinite(top), out, top)


class DensityError(ValueError):
    """A density object violates its structural invariants."""


class FusionError(RuntimeError):
    """Multi-sensor fusion cannot produce a valid density."""


class NumericalError(ArithmeticError):
    """A linear-algebra step failed (singular or indefinite matrix)."""


class BudgetError(RuntimeError):
    """A combinatorial enumeration exceeded its configured budget."""


class TrackLabel(NamedTuple):
    """Track identity: the scan it was born at plus a per-scan index.

    Tuple ordering gives the lexicographic (birth_time, birth_index) order
    used whenever label sets are serialized.
    """

    birth_time: int
    birth_index: int


class KinematicState(NamedTuple):
    """Planar position/velocity state in meters and meters per second.

    The canonical vector ordering is interleaved: [px, vx, py, vy].
    """

    px: float
    vx: float
    py: float
    vy: float

    @classmethod
    def from_array(cls, x: np.ndarray) -> "KinematicState":
        if len(x) != 4:
            raise ValueError("kinematic state must have 4 components")
        if not np.all(np.isfinite(x)):
            raise ValueError("kinematic state components must be finite")
        return cls(float(x[0]), float(x[1]), float(x[2]), float(x[3]))

    def to_array(self) -> np.ndarray:
        return np.array(self, dtype=float)

    @property
    def position(self) -> np.ndarray:
        return np.array([self.px, self.py])


def label_set_sort_key(labels: Iterable[TrackLabel]) -> tuple:
    """Deterministic ordering for label sets: cardinality then lexicographic."""
    ordered = tuple(sorted(labels))
    return (len(ordered), ordered)


def _spd_chol(cov: np.ndarray, jitter_scale: float = 1e-9):
    """Symmetrize, factor, and repair a covariance; returns (cov, cholesky)."""
    cov = 0.5 * (cov + cov.T)
    try:
        return cov, np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    n = cov.shape[0]
    jitter = jitter_scale * max(np.trace(cov), 0.0) / n
    repaired = cov + jitter * np.eye(n)
    try:
        return repaired, np.linalg.cholesky(repaired)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("covariance is not positive definite") from exc


def ensure_spd(cov: np.ndarray, jitter_scale: float = 1e-9) -> np.ndarray:
    """Symmetrize a covariance and repair tiny asymmetry / indefiniteness.

    Applies P <- (P + P^T)/2, then adds jitter_scale * trace/n on the
    diagonal if a Cholesky factorization fails.  Raises
    :class:`NumericalError` if the matrix is still not positive definite.
    """
    cov = np.asarray(cov, dtype=float)
    return _spd_chol(cov, jitter_scale)[0]


def log_mvnpdf(x: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> float:
    """Log density of N(x; mean, cov) for any dimension."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    diff = x - mean
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular covariance in Gaussian evaluation") from exc
    white = np.linalg.solve(chol, diff)
    quad = float(white @ white)
    logdet = 2.0 * float(np.log(np.diag(chol)).sum())
    n = len(mean)
    return -0.5 * (n * math.log(2.0 * math.pi) + logdet + quad)


@dataclass(frozen=True)
class GaussianComponent:
    """One weighted Gaussian component of a spatial density.

    The Cholesky factor computed during validation is kept on the instance
    (``chol``) since downstream likelihood code needs it anyway.
    """

    weight: float
    mean: np.ndarray
    cov: np.ndarray
    chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.ndim != 1:
            mean = mean.reshape(-1)
        if cov.ndim != 2:
            cov = cov.reshape(mean.size, mean.size)
        if self.weight < 0:
            raise DensityError("component weight must be non-negative")
        if not np.all(np.isfinite(mean)):
            raise DensityError("component mean must be finite")
        if cov.shape != (mean.size, mean.size):
            raise DensityError("covariance shape does not match mean dimension")
        asym = np.abs(cov - cov.T).max()
        scale = max(np.abs(cov).max(), 1.0)
        if asym > 1e-6 * scale:
            raise DensityError("covariance is not symmetric")
        cov, chol = _spd_chol(cov)
        mean = mean.copy()
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "weight", float(self.weight))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "chol", chol)

    @property
    def dim(self) -> int:
        return self.mean.size

    def log_pdf(self, x: np.ndarray) -> float:
        diff = np.asarray(x, dtype=float).reshape(-1) - self.mean
        white = np.linalg.solve(self.chol, diff)
        logdet = 2.0 * float(np.log(np.diag(self.chol)).sum())
        return -0.5 * (self.dim * math.log(2.0 * math.pi) + logdet
                       + float(white @ white))

    def predicted(self, transition: np.ndarray, noise: np.ndarray) -> "GaussianComponent":
        """Linear-Gaussian prediction of this component."""
        mean = transition @ self.mean
        cov = transition @ self.cov @ transition.T + noise
        return GaussianComponent(self.weight, mean, cov)


@dataclass(frozen=True)
class LabeledGaussianMixture:
    """Normalized Gaussian-mixture spatial density attached to one track."""

    label: TrackLabel
    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise DensityError("mixture needs at least one component")
        dim = comps[0].dim
        if any(c.dim != dim for c in comps):
            raise DensityError("mixture components have mixed dimensions")
        total = math.fsum(c.weight for c in comps)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise DensityError(f"mixture weights sum to {total!r}, expected 1")
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_components(cls, label: TrackLabel,
                        components: Sequence[GaussianComponent]) -> "LabeledGaussianMixture":
        """Build a mixture, renormalizing the component weights."""
        total = math.fsum(c.weight for c in components)
        if total <= 0:
            raise DensityError("mixture has zero total weight")
        comps = tuple(GaussianComponent(c.weight / total, c.mean, c.cov)
                      for c in components)
        return cls(label, comps)

    @classmethod
    def single(cls, label: TrackLabel, mean: np.ndarray,
               cov: np.ndarray) -> "LabeledGaussianMixture":
        return cls(label, (GaussianComponent(1.0, mean, cov),))

    @property
    def dim(self) -> int:
        return self.components[0].dim

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    def pdf(self, x: np.ndarray) -> float:
        return math.fsum(c.weight * math.exp(c.log_pdf(x)) for c in self.components)

    def mean(self) -> np.ndarray:
        return np.sum([c.weight * c.mean for c in self.components], axis=0)

    def best_component(self) -> GaussianComponent:
        """Highest-weight component; first wins on ties."""
        return max(self.components, key=lambda c: c.weight)

    def predicted(self, transition: np.ndarray, noise: np.ndarray) -> "LabeledGaussianMixture":
        return LabeledGaussianMixture(
            self.label, tuple(c.predicted(transition, noise) for c in self.components))

    def relabeled(self, label: TrackLabel) -> "LabeledGaussianMixture":
        return LabeledGaussianMixture(label, self.components)


def mix_mixtures(label: TrackLabel,
                 parts: Sequence[tuple[float, LabeledGaussianMixture]]) -> LabeledGaussianMixture:
    """Weighted average of mixtures: sum_k alpha_k p_k, renormalized."""
    comps = []
    for alpha, mixture in parts:
        if alpha < 0:
            raise DensityError("mixing weights must be non-negative")
        for c in mixture.components:
            comps.append(GaussianComponent(alpha * c.weight, c.mean, c.cov))
    return LabeledGaussianMixture.from_components(label, comps)


def reduce_mixture(mixture: LabeledGaussianMixture, max_components: int,
                   merge_distance: float = 1.0) -> LabeledGaussianMixture:
    """Merge nearby components (Mahalanobis < merge_distance) and cap by weight.

    Merging is moment-preserving within each cluster; capping keeps the
    highest-weight survivors and renormalizes.
    """
    comps = sorted(mixture.components, key=lambda c: -c.weight)
    merged: list[GaussianComponent] = []
    used = [False] * len(comps)
    for i, lead in enumerate(comps):
        if used[i]:
            continue
        cluster = [lead]
        used[i] = True
        for j in range(i + 1, len(comps)):
            if used[j]:
                continue
            white = np.linalg.solve(lead.chol, comps[j].mean - lead.mean)
            if float(white @ white) < merge_distance ** 2:
                cluster.append(comps[j])
                used[j] = True
        w = math.fsum(c.weight for c in cluster)
        if w <= 0:
            continue
        mean = np.sum([c.weight * c.mean for c in cluster], axis=0) / w
        cov = np.zeros_like(lead.cov)
        for c in cluster:
            d = (c.mean - mean).reshape(-1, 1)
            cov = cov + (c.weight / w) * (c.cov + d @ d.T)
        merged.append(GaussianComponent(w, mean, ensure_spd(cov)))
    merged.sort(key=lambda c: -c.weight)
    kept = merged[:max(1, max_components)]
    return LabeledGaussianMixture.from_components(mixture.label, kept)


@dataclass(frozen=True)
class GlmbHypothesis:
    """One (label set, association history) hypothesis with its log weight."""

    labels: frozenset
    assoc_history: int
    log_weight: float

    def __post_init__(self):
        object.__setattr__(self, "labels", frozenset(self.labels))
        if math.isnan(self.log_weight) or self.log_weight > WEIGHT_TOL:
            raise DensityError("hypothesis log-weight must be <= 0 once normalized")

    @property
    def weight(self) -> float:
        return math.exp(self.log_weight)

    def sort_key(self) -> tuple:
        return (-self.log_weight, label_set_sort_key(self.labels), self.assoc_history)


@dataclass(frozen=True)
class DeltaGlmbDensity:
    """Hypothesis-indexed labeled multi-target density.

    ``hypotheses`` carry normalized weights over (label set, association
    history) pairs; ``track_table`` maps (association history, label) to the
    per-track spatial density shared by every hypothesis with that history.
    Distinctness of labels inside a hypothesis holds by construction since
    label sets are stored as frozensets.
    """

    hypotheses: tuple
    track_table: dict

    def __post_init__(self):
        hyps = tuple(self.hypotheses)
        if not hyps:
            raise DensityError("density needs at least one hypothesis")
        log_total = logsumexp([h.log_weight for h in hyps])
        if abs(log_total) > WEIGHT_TOL:
            raise DensityError(f"hypothesis weights are not normalized (logsum={log_total!r})")
        table = dict(self.track_table)
        for h in hyps:
            for lbl in h.labels:
                if (h.assoc_history, lbl) not in table:
                    raise DensityError(f"track table is missing ({h.assoc_history}, {lbl})")
        object.__setattr__(self, "hypotheses", hyps)
        object.__setattr__(self, "track_table", table)

    @classmethod
    def empty(cls) -> "DeltaGlmbDensity":
        """Density certain of the empty target set."""
        return cls((GlmbHypothesis(frozenset(), 0, 0.0),), {})

    @classmethod
    def from_unnormalized(cls, entries: Sequence[tuple[frozenset, int, float]],
                          track_table: Mapping) -> "DeltaGlmbDensity":
        """Normalize raw (labels, history, log weight) triples into a density."""
        if not entries:
            raise DensityError("cannot normalize an empty hypothesis list")
        logs = np.array([e[2] for e in entries], dtype=float)
        total = logsumexp(logs)
        if not np.isfinite(total):
            raise DensityError("all hypothesis weights are zero")
        hyps = [GlmbHypothesis(labels, hist, lw - total)
                for (labels, hist, lw) in entries]
        hyps.sort(key=GlmbHypothesis.sort_key)
        used = {(h.assoc_history, lbl) for h in hyps for lbl in h.labels}
        table = {k: v for k, v in track_table.items() if k in used}
        return cls(tuple(hyps), table)

    def weights(self) -> np.ndarray:
        return np.array([h.weight for h in self.hypotheses])

    def track(self, assoc_history: int, label: TrackLabel) -> LabeledGaussianMixture:
        return self.track_table[(assoc_history, label)]

    def cardinality_distribution(self) -> np.ndarray:
        """P(|X| = n) for n = 0 .. max cardinality present."""
        max_n = max(len(h.labels) for h in self.hypotheses)
        dist = np.zeros(max_n + 1)
        for h in self.hypotheses:
            dist[len(h.labels)] += h.weight
        return dist


@dataclass(frozen=True)
class MdglmbEntry:
    """One label-set entry of a marginalized density."""

    log_weight: float
    tracks: dict

    @property
    def weight(self) -> float:
        return math.exp(self.log_weight)


@dataclass(frozen=True)
class MDeltaGlmbDensity:
    """Marginalized delta-GLMB: one weighted entry per label set."""

    entries: dict

    def __post_init__(self):
        entries = dict(self.entries)
        if not entries:
            raise DensityError("marginalized density needs at least one entry")
        log_total = logsumexp([e.log_weight for e in entries.values()])
        if abs(log_total) > WEIGHT_TOL:
            raise DensityError("entry weights are not normalized")
        for labels, entry in entries.items():
            if frozenset(entry.tracks) != frozenset(labels):
                raise DensityError("entry density map does not cover its label set")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def empty(cls) -> "MDeltaGlmbDensity":
        return cls({frozenset(): MdglmbEntry(0.0, {})})

    @classmethod
    def from_unnormalized(cls, raw: Mapping) -> "MDeltaGlmbDensity":
        """Normalize {label set: (log weight, tracks)} into a density."""
        if not raw:
            raise DensityError("cannot normalize an empty entry map")
        keys = sorted(raw, key=label_set_sort_key)
        total = logsumexp([raw[k][0] for k in keys])
        if not np.isfinite(total):
            raise DensityError("all entry weights are zero")
        entries = {k: MdglmbEntry(raw[k][0] - total, dict(raw[k][1])) for k in keys}
        return cls(entries)

    def sorted_items(self) -> list:
        return sorted(self.entries.items(), key=lambda kv: label_set_sort_key(kv[0]))

    def log_weight(self, labels: frozenset) -> float:
        entry = self.entries.get(frozenset(labels))
        return entry.log_weight if entry is not None else LOG_ZERO

    def cardinality_distribution(self) -> np.ndarray:
        max_n = max(len(k) for k in self.entries)
        dist = np.zeros(max_n + 1)
        for labels, entry in self.entries.items():
            dist[len(labels)] += entry.weight
        return dist

    def belief_density(self, pairs: Sequence[tuple]) -> float:
        """Evaluate the multi-target belief density at {(x, label), ...}.

        Returns 0 for label multisets with repeats (distinct-label indicator)
        and for label sets without an entry.
        """
        labels = [lbl for _, lbl in pairs]
        if len(set(labels)) != len(labels):
            return 0.0
        entry = self.entries.get(frozenset(labels))
        if entry is None:
            return 0.0
        value = entry.weight
        for x, lbl in pairs:
            value *= entry.tracks[lbl].pdf(x)
        return value


@dataclass(frozen=True)
class LmbTrack:
    """Existence probability plus spatial density for one LMB track."""

    existence: float
    density: LabeledGaussianMixture

    def __post_init__(self):
        if not 0.0 <= self.existence <= 1.0 + 1e-12:
            raise DensityError(f"existence probability {self.existence!r} outside [0, 1]")
        object.__setattr__(self, "existence", min(float(self.existence), 1.0))


@dataclass(frozen=True)
class LmbDensity:
    """Labeled multi-Bernoulli density: independent tracks."""

    tracks: dict

    def __post_init__(self):
        object.__setattr__(self, "tracks", dict(self.tracks))

    def sorted_items(self) -> list:
        return sorted(self.tracks.items())


def kronecker_delta(x, y) -> int:
    """Generalized Kronecker delta: 1 iff the two arguments are equal.

    Sets compare as sets, sequences elementwise, everything else by ==.
    """
    if isinstance(x, (set, frozenset)) or isinstance(y, (set, frozenset)):
        return int(set(x) == set(y))
    if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
        x_arr, y_arr = np.asarray(x), np.asarray(y)
        return int(x_arr.shape == y_arr.shape and bool(np.all(x_arr == y_arr)))
    if isinstance(x, (list, tuple)) and isinstance(y, (list, tuple)):
        return int(len(x) == len(y)
                   and all(kronecker_delta(a, b) for a, b in zip(x, y)))
    return int(x == y)


def multi_target_exponential(per_label: Mapping, labeled_set: Iterable[tuple]) -> float:
    """Product of per-label functions over a labeled set; 1 for the empty set.

    ``per_label`` maps each label to a function of the state.  A label in the
    set without a function signals an inconsistent density and raises
    :class:`DensityError`.
    """
    product = 1.0
    for x, lbl in labeled_set:
        fn = per_label.get(lbl)
        if fn is None:
            raise DensityError(f"no per-state function for label {lbl}")
        product *= fn(x)
    return product


def log_gaussian_pair_integral(a: GaussianComponent, b: GaussianComponent) -> float:
    """log of w_a w_b int N(x; m_a, P_a) N(x; m_b, P_b) dx.

    The integral is N(m_a; m_b, P_a + P_b) in closed form.
    """
    if a.weight == 0.0 or b.weight == 0.0:
        return LOG_ZERO
    return math.log(a.weight) + math.log(b.weight) + log_mvnpdf(a.mean, b.mean, a.cov + b.cov)


def gaussian_pair_integral(a: GaussianComponent, b: GaussianComponent) -> float:
    """w_a w_b int N(x; m_a, P_a) N(x; m_b, P_b) dx, always >= 0."""
    if a.weight == 0.0 or b.weight == 0.0:
        return 0.0
    return math.exp(log_gaussian_pair_integral(a, b))
