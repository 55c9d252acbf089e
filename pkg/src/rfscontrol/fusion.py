"""Generalized covariance intersection of labeled densities across sensors.

GCI fuses densities p_1 .. p_N with exponents omega_i summing to one:
the fused density is proportional to prod_i p_i^{omega_i}.  For marginalized
GLMB densities the rule acts per label set (entry weights get the geometric
mean times per-label overlap integrals); for LMB densities it acts per track.

Fractional powers of a single Gaussian stay Gaussian, so single-component
tracks fuse exactly in information form.  A Gaussian mixture has no
closed-form fractional power; the standard per-component approximation
(sum w_j N_j)^omega ~= sum w_j^omega N_j^omega is used, which recovers the
exact result in the single-component case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    FusionError,
    GaussianComponent,
    LOG_ZERO,
    LabeledGaussianMixture,
    LmbDensity,
    LmbTrack,
    MDeltaGlmbDensity,
    ensure_spd,
    label_set_sort_key,
    logsumexp,
)

__all__ = [
    "FusionWeights",
    "weighted_gm_power_product",
    "fuse_mdglmb",
    "fuse_lmb",
]


@dataclass(frozen=True)
class FusionWeights:
    """Per-sensor GCI exponents, positive and summing to one."""

    values: tuple

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("need at least one fusion weight")
        if any(not 0.0 < v <= 1.0 for v in values):
            raise ValueError("fusion weights must lie in (0, 1]")
        if abs(math.fsum(values) - 1.0) > 1e-12:
            raise ValueError("fusion weights must sum to 1")
        object.__setattr__(self, "values", values)

    @classmethod
    def uniform(cls, n: int) -> "FusionWeights":
        return cls(tuple(1.0 / n for _ in range(n)))

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


def _log_gaussian_power_scale(cov: np.ndarray, omega: float) -> float:
    """log c where N(x; m, P)^omega = c * N(x; m, P / omega)."""
    n = cov.shape[0]
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0:
        raise FusionError("covariance with non-positive determinant in fusion")
    return 0.5 * (1.0 - omega) * (n * math.log(2.0 * math.pi) + logdet) \
        - 0.5 * n * math.log(omega)


def _fuse_component_tuple(components, weights):
    """Exact fused Gaussian of prod_i (w_i N_i)^{omega_i}.

    Returns (log_scale, mean, cov) where the product equals
    exp(log_scale) * N(x; mean, cov).
    """
    dim = components[0].dim
    info = np.zeros((dim, dim))
    info_mean = np.zeros(dim)
    log_scale = 0.0
    log_two_pi = math.log(2.0 * math.pi)
    for comp, omega in zip(components, weights):
        if comp.weight == 0.0:
            return LOG_ZERO, components[0].mean, components[0].cov
        prec = omega * np.linalg.inv(comp.cov)
        info += prec
        info_mean += prec @ comp.mean
        sign, logdet = np.linalg.slogdet(comp.cov / omega)
        quad = float(comp.mean @ prec @ comp.mean)
        # omega-power scale plus the canonical-form constant of N(m, P/omega)
        log_scale += omega * math.log(comp.weight)
        log_scale += _log_gaussian_power_scale(comp.cov, omega)
        log_scale += -0.5 * (dim * log_two_pi + logdet + quad)
    cov = ensure_spd(np.linalg.inv(info))
    mean = cov @ info_mean
    sign, logdet = np.linalg.slogdet(cov)
    quad = float(mean @ info @ mean)
    log_scale -= -0.5 * (dim * log_two_pi + logdet + quad)
    return log_scale, mean, cov


def _log_weighted_gm_power_product(mixtures, weights: FusionWeights):
    """Fused mixture and log of int prod_i p_i^{omega_i} dx."""
    if len(mixtures) != len(weights):
        raise ValueError("one fusion weight per input density is required")
    label = mixtures[0].label
    if any(m.label != label for m in mixtures):
        raise FusionError("cannot fuse spatial densities with different labels")
    dims = {m.dim for m in mixtures}
    if len(dims) != 1:
        raise FusionError("cannot fuse densities of different state dimensions")

    fused = []
    logs = []
    for combo in np.ndindex(*[len(m.components) for m in mixtures]):
        comps = [m.components[j] for m, j in zip(mixtures, combo)]
        log_scale, mean, cov = _fuse_component_tuple(comps, weights.values)
        if log_scale == LOG_ZERO:
            continue
        fused.append((log_scale, mean, cov))
        logs.append(log_scale)
    if not fused:
        raise FusionError("fused density has zero mass")
    log_integral = float(logsumexp(logs))
    components = [GaussianComponent(math.exp(ls - log_integral), mean, cov)
                  for ls, mean, cov in fused]
    mixture = LabeledGaussianMixture.from_components(label, components)
    return mixture, log_integral


def weighted_gm_power_product(mixtures, weights: FusionWeights):
    """Normalized fused mixture plus the integral int prod_i p_i^{omega_i} dx.

    Exact when every input has a single component; per-component
    approximation otherwise.  The approximation overestimates mass where an
    input has strongly overlapping components of comparable weight, so
    mixtures should go through reduction (which merges such components)
    before fusion.
    """
    mixture, log_integral = _log_weighted_gm_power_product(list(mixtures), weights)
    return mixture, math.exp(log_integral)


def fuse_mdglmb(inputs, weights: FusionWeights) -> MDeltaGlmbDensity:
    """GCI fusion of marginalized delta-GLMB densities.

    Entry label sets must carry positive weight in every input; label sets
    missing anywhere get an exact zero factor and drop out.  Raises
    :class:`FusionError` when no label set is shared.
    """
    inputs = list(inputs)
    if len(inputs) != len(weights):
        raise ValueError("one fusion weight per input density is required")
    if not inputs:
        raise ValueError("need at least one density to fuse")
    shared = set(inputs[0].entries)
    for density in inputs[1:]:
        shared &= set(density.entries)
    if not shared:
        raise FusionError("no label set is present in every input")

    raw = {}
    for labels in sorted(shared, key=label_set_sort_key):
        entries = [density.entries[labels] for density in inputs]
        log_w = math.fsum(omega * entry.log_weight
                          for omega, entry in zip(weights, entries))
        tracks = {}
        degenerate = False
        for lbl in sorted(labels):
            try:
                mixture, log_integral = _log_weighted_gm_power_product(
                    [entry.tracks[lbl] for entry in entries], weights)
            except FusionError:
                degenerate = True
                break
            log_w += log_integral
            tracks[lbl] = mixture
        if degenerate:
            continue
        raw[labels] = (log_w, tracks)
    if not raw:
        raise FusionError("every shared label set fused to zero mass")
    return MDeltaGlmbDensity.from_unnormalized(raw)


def fuse_lmb(inputs, weights: FusionWeights) -> LmbDensity:
    """GCI fusion of LMB densities.

    A label absent from any input (or with zero existence there) fuses to
    existence zero and is dropped.
    """
    inputs = list(inputs)
    if len(inputs) != len(weights):
        raise ValueError("one fusion weight per input density is required")
    shared = set(inputs[0].tracks)
    for density in inputs[1:]:
        shared &= set(density.tracks)

    fused = {}
    for lbl in sorted(shared):
        tracks = [density.tracks[lbl] for density in inputs]
        if any(t.existence <= 0.0 for t in tracks):
            continue
        mixture, log_integral = _log_weighted_gm_power_product(
            [t.density for t in tracks], weights)
        log_num = math.fsum(omega * math.log(t.existence)
                            for omega, t in zip(weights, tracks)) + log_integral
        if any(t.existence >= 1.0 for t in tracks):
            log_void = LOG_ZERO
        else:
            log_void = math.fsum(omega * math.log1p(-t.existence)
                                 for omega, t in zip(weights, tracks))
        # r = num / (void + num), computed through log for stability
        log_den = np.logaddexp(log_void, log_num)
        existence = math.exp(log_num - log_den)
        fused[lbl] = LmbTrack(existence, mixture)
    return LmbDensity(fused)
