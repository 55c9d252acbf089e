"""Independent oracles used to validate the closed-form machinery.

Everything here recomputes a quantity by a route the production code never
takes: dense quadrature instead of Gaussian identities, exhaustive
enumeration instead of ranked assignment, linearized Kalman algebra instead
of the unscented transform.  Both the test suite and the CLI ``validate``
subcommand run these side by side with the fast paths.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .core import LabeledGaussianMixture
from .world import SensorModel, wrap_angle

__all__ = [
    "gaussian_pdf_1d",
    "quadrature_product_integral_1d",
    "quadrature_power_product_1d",
    "ekf_polar_update",
    "enumerate_association_maps",
    "exhaustive_update_weights",
    "brute_force_min_assignment",
]


def gaussian_pdf_1d(x, mean, var):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * (x - mean) ** 2 / var) / math.sqrt(2.0 * math.pi * var)


def _grid(lo: float, hi: float, n: int):
    xs = np.linspace(lo, hi, n)
    return xs, xs[1] - xs[0]


def quadrature_product_integral_1d(f, g, lo: float, hi: float, n: int = 20001) -> float:
    """int f(x) g(x) dx by trapezoid rule on a dense 1-D grid."""
    xs, dx = _grid(lo, hi, n)
    values = f(xs) * g(xs)
    return float(np.trapezoid(values, dx=dx))


def quadrature_power_product_1d(pdfs, omegas, lo: float, hi: float,
                                n: int = 20001):
    """Normalization and moments of prod_i p_i(x)^{omega_i} on a 1-D grid.

    Returns (integral, mean, variance) of the normalized power product.
    """
    xs, dx = _grid(lo, hi, n)
    log_vals = np.zeros_like(xs)
    for pdf, omega in zip(pdfs, omegas):
        vals = np.maximum(pdf(xs), 1e-300)
        log_vals += omega * np.log(vals)
    values = np.exp(log_vals)
    integral = float(np.trapezoid(values, dx=dx))
    mean = float(np.trapezoid(xs * values, dx=dx)) / integral
    var = float(np.trapezoid((xs - mean) ** 2 * values, dx=dx)) / integral
    return integral, mean, var


def ekf_polar_update(mean: np.ndarray, cov: np.ndarray, z: np.ndarray,
                     sensor: SensorModel):
    """First-order (Jacobian) Kalman update for the bearing/range likelihood.

    Independent linearized reference for the unscented update: returns
    (posterior mean, posterior covariance, log likelihood).
    """
    mean = np.asarray(mean, dtype=float)
    dx = mean[0] - sensor.position[0]
    dy = mean[2] - sensor.position[1]
    r2 = dx * dx + dy * dy
    r = math.sqrt(r2)
    jac = np.array([[-dy / r2, 0.0, dx / r2, 0.0],
                    [dx / r, 0.0, dy / r, 0.0]])
    zhat = sensor.measurement_of(mean)
    s_mat = jac @ cov @ jac.T + sensor.noise_cov(mean)
    nu = np.asarray(z, dtype=float) - zhat
    nu[0] = float(wrap_angle(nu[0]))
    s_inv = np.linalg.inv(s_mat)
    gain = cov @ jac.T @ s_inv
    post_mean = mean + gain @ nu
    post_cov = cov - gain @ s_mat @ gain.T
    log_like = -0.5 * (2.0 * math.log(2.0 * math.pi)
                       + math.log(np.linalg.det(s_mat))
                       + float(nu @ s_inv @ nu))
    return post_mean, post_cov, log_like


def enumerate_association_maps(n_tracks: int, n_meas: int):
    """All maps track -> measurement index or -1, measurements used once."""
    maps = []
    options = list(range(n_meas)) + [-1]
    for assignment in itertools.product(options, repeat=n_tracks):
        used = [a for a in assignment if a >= 0]
        if len(used) == len(set(used)):
            maps.append(assignment)
    return maps


def exhaustive_update_weights(predicted, measurements, sensor: SensorModel):
    """Unnormalized posterior hypothesis weights by full association enumeration.

    Returns [(label frozenset, association tuple, log weight)] covering every
    feasible association map of every predicted hypothesis.  Per-track
    detection and miss terms are recomputed here from the mixture and sensor
    models directly (component-mean detection probability, unscented
    marginal likelihood), mirroring the update contract without any ranked
    assignment or truncation.
    """
    from .filter import ZERO_CLUTTER_DENSITY, ukf_polar_terms

    scan = np.asarray(measurements, dtype=float).reshape(-1, 2)
    m = len(scan)
    log_kappa = math.log(max(sensor.clutter_intensity, ZERO_CLUTTER_DENSITY))

    def track_terms(mixture: LabeledGaussianMixture):
        miss = 0.0
        detect = np.zeros(m)
        for comp in mixture.components:
            pd = sensor.detection_probability(comp.mean)
            miss += comp.weight * (1.0 - pd)
            if m:
                moments = ukf_polar_terms(comp.mean, comp.cov, sensor)
                s_inv = np.linalg.inv(moments.s_mat)
                det = np.linalg.det(moments.s_mat)
                nu = scan - moments.zhat
                nu[:, 0] = wrap_angle(nu[:, 0])
                quad = np.einsum("ij,jk,ik->i", nu, s_inv, nu)
                like = np.exp(-0.5 * quad) / (2.0 * math.pi * math.sqrt(det))
                detect += comp.weight * pd * like
        log_miss = math.log(miss) if miss > 0 else -math.inf
        with np.errstate(divide="ignore"):
            log_detect = np.log(detect) - log_kappa
        return log_miss, log_detect

    results = []
    for hyp in predicted.hypotheses:
        labels = sorted(hyp.labels)
        terms = [track_terms(predicted.track_table[(hyp.assoc_history, lbl)])
                 for lbl in labels]
        for assoc in enumerate_association_maps(len(labels), m):
            log_w = hyp.log_weight
            for t, meas_idx in enumerate(assoc):
                log_w += terms[t][0] if meas_idx < 0 else terms[t][1][meas_idx]
            if math.isfinite(log_w):
                results.append((hyp.labels, assoc, log_w))
    return results


def brute_force_min_assignment(costs: np.ndarray) -> float:
    """Minimum assignment cost of all rows by raw permutation search."""
    costs = np.asarray(costs, dtype=float)
    m, n = costs.shape
    best = math.inf
    for cols in itertools.permutations(range(n), m):
        total = float(costs[np.arange(m), cols].sum())
        if total < best:
            best = total
    return best
