"""Local delta-GLMB filtering for one range-bearing sensor.

The recursion keeps a bank of (label set, association history) hypotheses
with shared per-track Gaussian mixtures:

* :func:`predict` enumerates survival subsets of each hypothesis combined
  with birth subsets, Kalman-predicts surviving tracks and truncates.
* :func:`update` enumerates track-to-measurement association maps per
  hypothesis through a ranked-assignment (Murty) sweep, updating tracks with
  an unscented transform to handle the nonlinear bearing/range likelihood.
* :func:`marginalize_to_mdglmb`, :func:`convert_to_lmb` and
  :func:`map_estimate` produce the fused-side and output-side summaries.

Hypothesis weights live in log space throughout; truncation is floor ->
cap -> renormalize.
"""

from __future__ import annotations

import heapq
import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .assignment import murty
from .core import (
    DeltaGlmbDensity,
    DensityError,
    GaussianComponent,
    KinematicState,
    LOG_ZERO,
    LabeledGaussianMixture,
    LmbDensity,
    LmbTrack,
    MDeltaGlmbDensity,
    TrackLabel,
    ensure_spd,
    label_set_sort_key,
    logsumexp,
    logsumexp_rows,
    mix_mixtures,
    reduce_mixture,
)
from .world import SensorModel, wrap_angle

__all__ = [
    "MotionModel",
    "BirthSite",
    "BirthModel",
    "FilterParams",
    "predict",
    "update",
    "truncate_density",
    "marginalize_to_mdglmb",
    "convert_to_lmb",
    "map_estimate",
    "ukf_polar_terms",
]

logger = logging.getLogger(__name__)

# Density substituted for kappa(z) when the clutter model is exactly zero.
ZERO_CLUTTER_DENSITY = 1e-12


@dataclass(frozen=True)
class MotionModel:
    """Linear-Gaussian single-target motion with per-scan survival."""

    transition: np.ndarray
    process_noise: np.ndarray
    survival_probability: float = 0.98
    dt: float = 1.0

    def __post_init__(self):
        transition = np.asarray(self.transition, dtype=float).copy()
        noise = ensure_spd(np.asarray(self.process_noise, dtype=float)) \
            if np.any(self.process_noise) else np.asarray(self.process_noise, dtype=float).copy()
        transition.setflags(write=False)
        noise.setflags(write=False)
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "process_noise", noise)
        if not 0.0 < self.survival_probability <= 1.0:
            raise ValueError("survival probability must be in (0, 1]")

    @classmethod
    def constant_velocity(cls, dt: float, accel_noise: float,
                          survival_probability: float = 0.98) -> "MotionModel":
        """Planar constant-velocity model on interleaved [px, vx, py, vy].

        Per axis: F = [[1, dt], [0, 1]], Q = accel_noise^2 *
        [[dt^4/4, dt^3/2], [dt^3/2, dt^2]].
        """
        f_axis = np.array([[1.0, dt], [0.0, 1.0]])
        q_axis = accel_noise ** 2 * np.array([[dt ** 4 / 4.0, dt ** 3 / 2.0],
                                              [dt ** 3 / 2.0, dt ** 2]])
        transition = np.kron(np.eye(2), f_axis)
        noise = np.kron(np.eye(2), q_axis)
        return cls(transition, noise, survival_probability, dt)


@dataclass(frozen=True)
class BirthSite:
    """One labeled-multi-Bernoulli birth track template."""

    index: int
    probability: float
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        if not 0.0 < self.probability <= 1.0:
            raise ValueError("birth existence probability must be in (0, 1]")
        mean = np.asarray(self.mean, dtype=float).copy()
        cov = ensure_spd(np.asarray(self.cov, dtype=float))
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


@dataclass(frozen=True)
class BirthModel:
    """LMB birth: candidate tracks minted fresh labels every scan."""

    sites: tuple

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        indices = [s.index for s in self.sites]
        if len(set(indices)) != len(indices):
            raise ValueError("birth site indices must be distinct")

    def labeled(self, scan: int) -> list:
        """[(label, existence probability, spatial density)] for this scan."""
        out = []
        for site in sorted(self.sites, key=lambda s: s.index):
            label = TrackLabel(scan, site.index)
            out.append((label, site.probability,
                        LabeledGaussianMixture.single(label, site.mean, site.cov)))
        return out


@dataclass(frozen=True)
class FilterParams:
    """Truncation control for the hypothesis bank and per-track mixtures.

    ``keep_best_per_label_set`` lets the cap retain the best hypothesis of
    every label set that clears the floor, on top of the globally heaviest
    ones.  The local filters need it so that label-set families survive
    detection dropouts (the GCI fusion intersects families across sensors);
    throwaway control rollouts switch it off for speed.
    """

    max_hypotheses: int = 1000
    hypothesis_weight_floor: float = 1e-5
    max_components_per_track: int = 5
    merge_mahalanobis: float = 1.0
    keep_best_per_label_set: bool = True

    def __post_init__(self):
        if self.max_hypotheses < 1:
            raise ValueError("max_hypotheses must be at least 1")
        if not 0.0 <= self.hypothesis_weight_floor < 1.0:
            raise ValueError("hypothesis weight floor must be in [0, 1)")
        if self.max_components_per_track < 1:
            raise ValueError("max_components_per_track must be at least 1")


def _descending_binary_choices(pairs, log_stop, max_count):
    """Yield (log_weight, keep_mask) over all keep/drop combinations.

    ``pairs`` holds (log_keep, log_drop) per slot.  Combinations come out in
    nonincreasing log-weight order; enumeration stops once weights fall
    below ``log_stop`` or ``max_count`` combinations were produced.
    """
    n = len(pairs)
    default_keep = tuple(lk >= ld for lk, ld in pairs)
    base = sum(max(lk, ld) for lk, ld in pairs)
    if base == LOG_ZERO or base < log_stop:
        return
    yield base, default_keep
    if n == 0 or max_count <= 1:
        return
    penalties = sorted((abs(lk - ld), i) for i, (lk, ld) in enumerate(pairs))
    produced = 1
    if not math.isfinite(penalties[0][0]):
        return
    # Lazy k-smallest subset-sum enumeration over flip penalties.
    heap = [(penalties[0][0], 0, (0,))]
    while heap and produced < max_count:
        pen_sum, last, flips = heapq.heappop(heap)
        log_w = base - pen_sum
        if log_w < log_stop:
            break
        mask = list(default_keep)
        for f in flips:
            slot = penalties[f][1]
            mask[slot] = not mask[slot]
        yield log_w, tuple(mask)
        produced += 1
        nxt = last + 1
        if nxt < n and math.isfinite(penalties[nxt][0]):
            heapq.heappush(heap, (pen_sum + penalties[nxt][0], nxt, flips + (nxt,)))
            heapq.heappush(heap,
                           (pen_sum - penalties[last][0] + penalties[nxt][0],
                            nxt, flips[:-1] + (nxt,)))


def _truncate(entries, params: FilterParams):
    """Floor-prune, cap and renormalize raw (labels, hist, logw, payload) rows.

    The cap keeps the globally heaviest hypotheses plus the single best
    hypothesis of every label set that clears the floor.  Without the
    per-set guard, association variants of a dominant label set evict whole
    label sets from the bank, and downstream label-set intersections (GCI
    fusion) lose their support during detection dropouts.
    """
    logs = np.array([e[2] for e in entries], dtype=float)
    total = logsumexp(logs) if len(logs) else LOG_ZERO
    if not np.isfinite(total):
        return []
    normalized = logs - total
    floor = math.log(params.hypothesis_weight_floor) \
        if params.hypothesis_weight_floor > 0 else LOG_ZERO
    keep = [(entries[i], normalized[i]) for i in range(len(entries))
            if np.isfinite(normalized[i]) and normalized[i] >= floor]
    keep.sort(key=lambda pair: (-pair[1], label_set_sort_key(pair[0][0])))
    head = keep[:params.max_hypotheses]
    if params.keep_best_per_label_set:
        represented = {pair[0][0] for pair in head}
        for pair in keep[params.max_hypotheses:]:
            if pair[0][0] not in represented:
                head.append(pair)
                represented.add(pair[0][0])
    if not head:
        return []
    logs = np.array([lw for _, lw in head])
    logs -= logsumexp(logs)
    return [(entry[0], entry[1], logs[i]) + tuple(entry[3:])
            for i, (entry, _) in enumerate(head)]


def predict(prior: DeltaGlmbDensity, motion: MotionModel,
            birth: BirthModel | None, params: FilterParams,
            time: int = 0) -> DeltaGlmbDensity:
    """Chapman-Kolmogorov prediction with survival and LMB birth.

    Each prior hypothesis spawns one candidate per (survival subset, birth
    subset) pair, weighted by the survival/death and birth existence
    products; candidates sharing (label set, history) merge.  ``time`` mints
    the birth labels for the predicted scan.
    """
    births = birth.labeled(time) if birth is not None else []
    prior_label_pool = {lbl for h in prior.hypotheses for lbl in h.labels}
    for label, _, _ in births:
        if label in prior_label_pool:
            raise DensityError(f"birth label {label} collides with a live track")

    log_floor = math.log(params.hypothesis_weight_floor) \
        if params.hypothesis_weight_floor > 0 else LOG_ZERO
    merged: dict = {}
    for hyp in prior.hypotheses:
        labels = sorted(hyp.labels)
        p_s = motion.survival_probability
        slots = [(math.log(p_s), math.log1p(-p_s) if p_s < 1.0 else LOG_ZERO)
                 for _ in labels]
        slots += [(math.log(r), math.log1p(-r) if r < 1.0 else LOG_ZERO)
                  for _, r, _ in births]
        stop = log_floor - hyp.log_weight if hyp.log_weight > LOG_ZERO else 0.0
        # The stream budget exceeds the cap so the per-set truncation guard
        # still sees label-set-diverse subsets; the floor bounds real work.
        budget = max(params.max_hypotheses, 8 * (len(slots) + 1))
        for log_w, mask in _descending_binary_choices(slots, stop, budget):
            survivors = [labels[i] for i in range(len(labels)) if mask[i]]
            born = [births[j][0] for j in range(len(births))
                    if mask[len(labels) + j]]
            key = (frozenset(survivors + born), hyp.assoc_history)
            value = hyp.log_weight + log_w
            merged[key] = np.logaddexp(merged[key], value) if key in merged else value

    raw = [(labels, hist, lw) for (labels, hist), lw in merged.items()]
    kept = _truncate(raw, params)
    if not kept:
        raise DensityError("no hypothesis survived prediction truncation")

    # Hypotheses frequently share the same underlying mixture object, so the
    # Kalman predictions are cached per object rather than per table key.
    predicted_cache: dict = {}
    birth_density = {label: density for label, _, density in births}
    table = {}
    for labels, hist, _ in kept:
        for lbl in labels:
            key = (hist, lbl)
            if key in table:
                continue
            if lbl in birth_density:
                table[key] = birth_density[lbl]
            else:
                prior_mixture = prior.track_table[key]
                cached = predicted_cache.get(id(prior_mixture))
                if cached is None:
                    cached = prior_mixture.predicted(motion.transition,
                                                     motion.process_noise)
                    predicted_cache[id(prior_mixture)] = cached
                table[key] = cached
    return DeltaGlmbDensity.from_unnormalized(
        [(labels, hist, lw) for labels, hist, lw in kept], table)


_UT_CACHE: dict = {}


def _ut_weights(n: int, alpha: float = 1e-3, beta: float = 2.0, kappa: float = 0.0):
    key = (n, alpha, beta, kappa)
    cached = _UT_CACHE.get(key)
    if cached is not None:
        return cached
    lam = alpha * alpha * (n + kappa) - n
    c = n + lam
    wm = np.full(2 * n + 1, 1.0 / (2.0 * c))
    wc = wm.copy()
    wm[0] = lam / c
    wc[0] = lam / c + (1.0 - alpha * alpha + beta)
    wm.setflags(write=False)
    wc.setflags(write=False)
    _UT_CACHE[key] = (c, wm, wc)
    return c, wm, wc


@dataclass(frozen=True)
class PolarMoments:
    """Unscented bearing/range likelihood moments for one Gaussian component."""

    zhat: np.ndarray
    s_mat: np.ndarray
    s_inv: np.ndarray
    log_det_s: float
    gain: np.ndarray

    def log_likelihoods(self, scan: np.ndarray) -> np.ndarray:
        """Vectorized log N(z; zhat, S) over measurement rows."""
        nu = scan - self.zhat
        nu0 = wrap_angle(nu[:, 0])
        nu1 = nu[:, 1]
        quad = (self.s_inv[0, 0] * nu0 * nu0
                + 2.0 * self.s_inv[0, 1] * nu0 * nu1
                + self.s_inv[1, 1] * nu1 * nu1)
        return -0.5 * (2.0 * math.log(2.0 * math.pi) + self.log_det_s + quad)


def ukf_polar_terms(mean: np.ndarray, cov: np.ndarray, sensor: SensorModel,
                    chol: np.ndarray | None = None) -> PolarMoments:
    """Unscented moments of the bearing/range likelihood at one component.

    The innovation covariance includes the range-dependent measurement noise
    evaluated at the component mean.  The 2x2 innovation algebra is done in
    closed form; sigma points reuse a precomputed Cholesky factor of the
    covariance when available.
    """
    n = mean.size
    c, wm, wc = _ut_weights(n)
    if chol is None:
        chol = np.linalg.cholesky(cov)
    spread = math.sqrt(c) * chol.T  # rows are the sigma offsets
    sigma = np.empty((2 * n + 1, n))
    sigma[0] = mean
    sigma[1:n + 1] = mean + spread
    sigma[n + 1:] = mean - spread

    zs = sensor.measurements_of(sigma)
    # Keep all sigma bearings on the same branch as the central point.
    zs[:, 0] = zs[0, 0] + wrap_angle(zs[:, 0] - zs[0, 0])
    zhat = zs[0] + (wm[1:, None] * (zs[1:] - zs[0])).sum(axis=0)
    dz = zs - zhat
    sigma_theta, sigma_r = sensor.noise_scales_at_range(zs[0, 1])
    s_mat = dz.T @ (wc[:, None] * dz)
    s_mat = 0.5 * (s_mat + s_mat.T)
    s_mat[0, 0] += sigma_theta ** 2
    s_mat[1, 1] += sigma_r ** 2
    a, b, d = s_mat[0, 0], s_mat[0, 1], s_mat[1, 1]
    det = a * d - b * b
    if det <= 0.0 or a <= 0.0:
        jitter = 1e-12 * max(a + d, 1.0)
        a += jitter
        d += jitter
        det = a * d - b * b
        if det <= 0.0:
            raise DensityError("degenerate innovation covariance")
        s_mat = np.array([[a, b], [b, d]])
    s_inv = np.array([[d, -b], [-b, a]]) / det
    dx = sigma - mean
    cross = dx.T @ (wc[:, None] * dz)
    gain = cross @ s_inv
    return PolarMoments(zhat, s_mat, s_inv, math.log(det), gain)


class _TrackLikelihood:
    """Per-track measurement statistics shared across hypotheses.

    Precomputes, for every mixture component, the unscented likelihood
    moments, the detection probability at the component mean, and vectorized
    log likelihoods against the scan.  Posterior mixtures for
    miss/detection outcomes are built lazily and cached.
    """

    def __init__(self, mixture: LabeledGaussianMixture, scan: np.ndarray,
                 sensor: SensorModel, params: FilterParams):
        self.mixture = mixture
        self.scan = scan
        self.params = params
        m = len(scan)
        comps = mixture.components
        self._terms = [ukf_polar_terms(c.mean, c.cov, sensor, c.chol)
                       for c in comps]
        self._pd = sensor.detection_probabilities(
            np.array([c.mean for c in comps]))
        weights = mixture.weights

        miss_mass = float(np.sum(weights * (1.0 - self._pd)))
        self.log_miss = math.log(miss_mass) if miss_mass > 0 else LOG_ZERO

        if m:
            # The update weighs detections as P_D g(z|x) / kappa(z).  A zero
            # clutter intensity is regularized to a vanishing false-alarm
            # density so the clutter-free limit still confirms tracks.
            log_kappa = math.log(max(sensor.clutter_intensity, ZERO_CLUTTER_DENSITY))
            self._log_like = np.vstack([t.log_likelihoods(scan) for t in self._terms])
            det = np.log(weights * self._pd + 1e-300)[:, None] + self._log_like
            self.log_detect = logsumexp_rows(det) - log_kappa
        else:
            self._log_like = np.zeros((len(comps), 0))
            self.log_detect = np.zeros(0)
        self._miss_mixture = None
        self._detect_cache: dict = {}

    def miss_mixture(self) -> LabeledGaussianMixture:
        if self._miss_mixture is None:
            raw = self.mixture.weights * (1.0 - self._pd)
            total = raw.sum()
            if total <= 0.0:
                self._miss_mixture = self.mixture
            else:
                comps = [GaussianComponent(w / total, c.mean, c.cov)
                         for w, c in zip(raw, self.mixture.components)]
                self._miss_mixture = self._reduced(
                    LabeledGaussianMixture(self.mixture.label, tuple(comps)))
        return self._miss_mixture

    def detect_mixture(self, meas_idx: int) -> LabeledGaussianMixture:
        cached = self._detect_cache.get(meas_idx)
        if cached is not None:
            return cached
        z = self.scan[meas_idx]
        posts = []
        for j, c in enumerate(self.mixture.components):
            t = self._terms[j]
            nu = z - t.zhat
            nu[0] = float(wrap_angle(nu[0]))
            mean = c.mean + t.gain @ nu
            cov = c.cov - t.gain @ t.s_mat @ t.gain.T
            log_w = math.log(c.weight * self._pd[j] + 1e-300) + self._log_like[j, meas_idx]
            posts.append((log_w, mean, cov))
        top = max(lw for lw, _, _ in posts)
        raw = np.array([math.exp(lw - top) for lw, _, _ in posts])
        raw /= raw.sum()
        mixture = LabeledGaussianMixture(
            self.mixture.label,
            tuple(GaussianComponent(w, mean, cov)
                  for w, (_, mean, cov) in zip(raw, posts)))
        mixture = self._reduced(mixture)
        self._detect_cache[meas_idx] = mixture
        return mixture

    def _reduced(self, mixture: LabeledGaussianMixture) -> LabeledGaussianMixture:
        if len(mixture.components) <= self.params.max_components_per_track:
            return mixture
        return reduce_mixture(mixture, self.params.max_components_per_track,
                              self.params.merge_mahalanobis)


class AssociationDegenerateWarning(RuntimeWarning):
    """Raised warning category when every association weight underflowed."""


def update(predicted: DeltaGlmbDensity, measurements, sensor: SensorModel,
           params: FilterParams) -> DeltaGlmbDensity:
    """Measurement update with ranked-assignment hypothesis generation.

    For each predicted hypothesis, association maps assign every track a
    measurement or a missed detection (measurements used at most once).
    Detected tracks contribute P_D * g(z | x) / kappa(z); missed ones
    1 - P_D.  The ceil(max_hypotheses * weight) best maps per hypothesis
    come from a Murty sweep; the pooled candidates then go through floor,
    cap and renormalization.
    """
    scan = np.asarray(measurements, dtype=float).reshape(-1, 2)
    m = len(scan)

    keys = sorted({(h.assoc_history, lbl)
                   for h in predicted.hypotheses for lbl in h.labels})
    # One statistics block per distinct mixture object, shared across the
    # (history, label) keys that reference it.
    stats_by_mixture: dict = {}
    stats = {}
    for key in keys:
        mixture = predicted.track_table[key]
        block = stats_by_mixture.get(id(mixture))
        if block is None:
            block = _TrackLikelihood(mixture, scan, sensor, params)
            stats_by_mixture[id(mixture)] = block
        stats[key] = block

    candidates = []  # (labels, parent_hist, logw, assoc tuple in sorted-label order)
    for hyp in predicted.hypotheses:
        labels = sorted(hyp.labels)
        n_t = len(labels)
        if n_t == 0:
            candidates.append((hyp.labels, hyp.assoc_history, hyp.log_weight, ()))
            continue
        track_stats = [stats[(hyp.assoc_history, lbl)] for lbl in labels]
        miss_logs = np.array([s.log_miss for s in track_stats])
        if m == 0:
            logw = hyp.log_weight + float(miss_logs.sum())
            candidates.append((hyp.labels, hyp.assoc_history, logw, (-1,) * n_t))
            continue
        cost = np.full((n_t, m + n_t), np.inf)
        for t, s in enumerate(track_stats):
            cost[t, :m] = -s.log_detect
            cost[t, m + t] = -miss_logs[t]
        k_req = max(1, math.ceil(params.max_hypotheses * hyp.weight))
        for cols, total in murty(cost, k_req):
            assoc = tuple(c if c < m else -1 for c in cols)
            candidates.append((hyp.labels, hyp.assoc_history,
                               hyp.log_weight - total, assoc))

    finite = [c for c in candidates if np.isfinite(c[2])]
    if not finite:
        warnings.warn("all association weights vanished; falling back to "
                      "missed-detection hypotheses", AssociationDegenerateWarning)
        finite = [(h.labels, h.assoc_history, h.log_weight,
                   (-1,) * len(h.labels)) for h in predicted.hypotheses]

    kept = _truncate(finite, params)
    if not kept:
        raise DensityError("no hypothesis survived update truncation")

    table = {}
    hyp_entries = []
    for new_hist, (labels, parent_hist, logw, assoc) in enumerate(kept):
        ordered = sorted(labels)
        for t, lbl in enumerate(ordered):
            meas_idx = assoc[t] if t < len(assoc) else -1
            block = stats[(parent_hist, lbl)]
            # Posterior mixtures are cached inside the block, so hypotheses
            # sharing an association reuse the same object.
            table[(new_hist, lbl)] = block.miss_mixture() if meas_idx < 0 \
                else block.detect_mixture(meas_idx)
        hyp_entries.append((labels, new_hist, logw))
    return DeltaGlmbDensity.from_unnormalized(hyp_entries, table)


def truncate_density(density: DeltaGlmbDensity, params: FilterParams) -> DeltaGlmbDensity:
    """Re-truncate an existing density (floor, cap, renormalize)."""
    raw = [(h.labels, h.assoc_history, h.log_weight) for h in density.hypotheses]
    kept = _truncate(raw, params)
    if not kept:
        raise DensityError("truncation removed every hypothesis")
    table = {(hist, lbl): density.track_table[(hist, lbl)]
             for labels, hist, _ in kept for lbl in labels}
    return DeltaGlmbDensity.from_unnormalized(kept, table)


def restrict_to_label_sets(density: DeltaGlmbDensity,
                           label_sets) -> DeltaGlmbDensity:
    """Condition a density on its label set lying in a given family.

    Used by the control stage to keep every sensor's pseudo-update chain on
    the fused density's support, so the strict GCI label-set product stays
    non-empty.  Falls back to the input when no hypothesis matches.
    """
    allowed = {frozenset(s) for s in label_sets}
    raw = [(h.labels, h.assoc_history, h.log_weight)
           for h in density.hypotheses if h.labels in allowed]
    if not raw:
        return density
    table = {(hist, lbl): density.track_table[(hist, lbl)]
             for labels, hist, _ in raw for lbl in labels}
    return DeltaGlmbDensity.from_unnormalized(raw, table)


def marginalize_to_mdglmb(density: DeltaGlmbDensity,
                          max_components: int | None = None,
                          merge_mahalanobis: float = 1.0) -> MDeltaGlmbDensity:
    """Marginalize association histories: one weighted entry per label set.

    Entry weight is the summed hypothesis weight; per-track densities are
    the weight-averaged mixtures.  ``max_components`` optionally reduces the
    averaged mixtures (the exact marginal otherwise).
    """
    groups: dict = {}
    for hyp in density.hypotheses:
        groups.setdefault(hyp.labels, []).append(hyp)

    raw = {}
    for labels in sorted(groups, key=label_set_sort_key):
        hyps = groups[labels]
        log_w = float(logsumexp([h.log_weight for h in hyps]))
        tracks = {}
        for lbl in sorted(labels):
            parts = [(math.exp(h.log_weight - log_w),
                      density.track_table[(h.assoc_history, lbl)]) for h in hyps]
            mixture = mix_mixtures(lbl, parts)
            if max_components is not None \
                    and len(mixture.components) > max_components:
                mixture = reduce_mixture(mixture, max_components, merge_mahalanobis)
            tracks[lbl] = mixture
        raw[labels] = (log_w, tracks)
    return MDeltaGlmbDensity.from_unnormalized(raw)


def convert_to_lmb(density: DeltaGlmbDensity) -> LmbDensity:
    """Collapse to per-track existence probabilities and averaged densities."""
    label_hyps: dict = {}
    for hyp in density.hypotheses:
        for lbl in hyp.labels:
            label_hyps.setdefault(lbl, []).append(hyp)

    tracks = {}
    for lbl in sorted(label_hyps):
        hyps = label_hyps[lbl]
        log_r = float(logsumexp([h.log_weight for h in hyps]))
        parts = [(math.exp(h.log_weight - log_r),
                  density.track_table[(h.assoc_history, lbl)]) for h in hyps]
        tracks[lbl] = LmbTrack(min(math.exp(log_r), 1.0), mix_mixtures(lbl, parts))
    return LmbDensity(tracks)


def map_estimate(density: MDeltaGlmbDensity) -> list:
    """MAP multi-target estimate from a marginalized density.

    Picks the MAP cardinality, then the heaviest entry of that cardinality
    (label order breaks ties), then each track's dominant component mean.
    Returns [(label, KinematicState)] sorted by label.
    """
    card = density.cardinality_distribution()
    n_star = int(np.argmax(card))
    pool = [(labels, entry) for labels, entry in density.sorted_items()
            if len(labels) == n_star]
    pool.sort(key=lambda kv: (-kv[1].log_weight, label_set_sort_key(kv[0])))
    labels, entry = pool[0]
    out = []
    for lbl in sorted(labels):
        mean = entry.tracks[lbl].best_component().mean
        out.append((lbl, KinematicState.from_array(mean)))
    return out
