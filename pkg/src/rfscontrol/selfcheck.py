"""Oracle battery behind the CLI ``validate`` subcommand.

Each check recomputes something the library does in closed form using an
independent route (quadrature, exhaustive enumeration, brute force) and
compares.  The random-density generators here are shared with the test
suite so both exercise the same distribution of inputs.
"""

from __future__ import annotations

import math

import numpy as np

from .core import (
    DeltaGlmbDensity,
    GaussianComponent,
    LabeledGaussianMixture,
    MDeltaGlmbDensity,
    TrackLabel,
    gaussian_pair_integral,
)
from .divergence import cs_divergence, set_integral_oracle, zeta
from .filter import FilterParams, update
from .fusion import FusionWeights, weighted_gm_power_product
from .metrics import OspaParams, ospa
from .validation import (
    exhaustive_update_weights,
    gaussian_pdf_1d,
    quadrature_power_product_1d,
    quadrature_product_integral_1d,
)
from .world import Region, SensorModel

__all__ = [
    "random_mixture_1d",
    "random_mdglmb_1d",
    "random_mixture",
    "random_mdglmb",
    "random_delta_glmb",
    "toy_sensor",
    "zeta_oracle",
    "run_battery",
]


def random_mixture_1d(rng: np.random.Generator, label: TrackLabel,
                      max_components: int = 2) -> LabeledGaussianMixture:
    k = int(rng.integers(1, max_components + 1))
    weights = rng.uniform(0.2, 1.0, size=k)
    weights /= weights.sum()
    comps = [GaussianComponent(w, [rng.uniform(-2.5, 2.5)],
                               [[rng.uniform(0.5, 2.0)]]) for w in weights]
    return LabeledGaussianMixture.from_components(label, comps)


def random_mdglmb_1d(rng: np.random.Generator, labels=None,
                     max_components: int = 2) -> MDeltaGlmbDensity:
    """Random 1-D marginalized density over subsets of a small label pool."""
    if labels is None:
        labels = [TrackLabel(0, 0), TrackLabel(0, 1)]
    subsets = [frozenset()]
    for lbl in labels:
        subsets.append(frozenset([lbl]))
    subsets.append(frozenset(labels))
    count = int(rng.integers(1, min(3, len(subsets)) + 1))
    picked = sorted(rng.choice(len(subsets), size=count, replace=False))
    raw = {}
    for idx in picked:
        labels_set = subsets[int(idx)]
        tracks = {lbl: random_mixture_1d(rng, lbl, max_components)
                  for lbl in labels_set}
        raw[labels_set] = (float(np.log(rng.uniform(0.2, 1.0))), tracks)
    return MDeltaGlmbDensity.from_unnormalized(raw)


def _random_spd(rng: np.random.Generator, dim: int, scale: float) -> np.ndarray:
    a = rng.standard_normal((dim, dim))
    return scale * (a @ a.T + dim * np.eye(dim))


def random_mixture(rng: np.random.Generator, label: TrackLabel, dim: int = 4,
                   max_components: int = 2, spread: float = 500.0) -> LabeledGaussianMixture:
    k = int(rng.integers(1, max_components + 1))
    weights = rng.uniform(0.2, 1.0, size=k)
    weights /= weights.sum()
    comps = [GaussianComponent(w, rng.uniform(-spread, spread, size=dim),
                               _random_spd(rng, dim, rng.uniform(5.0, 50.0)))
             for w in weights]
    return LabeledGaussianMixture.from_components(label, comps)


def random_mdglmb(rng: np.random.Generator, dim: int = 4,
                  max_components: int = 2) -> MDeltaGlmbDensity:
    labels = [TrackLabel(0, 0), TrackLabel(0, 1)]
    subsets = [frozenset(), frozenset([labels[0]]), frozenset([labels[1]]),
               frozenset(labels)]
    count = int(rng.integers(1, 4))
    picked = sorted(rng.choice(len(subsets), size=count, replace=False))
    raw = {}
    for idx in picked:
        labels_set = subsets[int(idx)]
        tracks = {lbl: random_mixture(rng, lbl, dim, max_components)
                  for lbl in labels_set}
        raw[labels_set] = (float(np.log(rng.uniform(0.2, 1.0))), tracks)
    return MDeltaGlmbDensity.from_unnormalized(raw)


def random_delta_glmb(rng: np.random.Generator, n_tracks: int,
                      region_scale: float = 800.0) -> DeltaGlmbDensity:
    """Random small delta-GLMB with 4-D single-Gaussian tracks."""
    labels = [TrackLabel(1, i) for i in range(n_tracks)]
    table = {}
    entries = []
    n_hyps = int(rng.integers(1, 3))
    for hist in range(n_hyps):
        keep = [lbl for lbl in labels if rng.uniform() < 0.8]
        for lbl in keep:
            mean = np.array([rng.uniform(-region_scale, region_scale),
                             rng.uniform(-20, 20),
                             rng.uniform(-region_scale, region_scale),
                             rng.uniform(-20, 20)])
            cov = np.diag(rng.uniform([50, 5, 50, 5], [400, 40, 400, 40]) ** 2)
            table[(hist, lbl)] = LabeledGaussianMixture.single(lbl, mean, cov)
        entries.append((frozenset(keep), hist, float(np.log(rng.uniform(0.2, 1.0)))))
    return DeltaGlmbDensity.from_unnormalized(entries, table)


def toy_sensor(position=(0.0, -800.0), clutter_rate: float = 5.0,
               region_half: float = 1500.0) -> SensorModel:
    region = Region(-region_half, region_half, -region_half, region_half)
    return SensorModel(position=np.asarray(position, dtype=float),
                       clutter_rate=clutter_rate, region=region)


def zeta_oracle(phi: MDeltaGlmbDensity, psi: MDeltaGlmbDensity,
                K: float = 1.0, grid_points: int = 48,
                half_width: float = 10.0) -> float:
    """Brute-force zeta via the set-integral oracle on a 1-D grid."""
    labels = sorted({lbl for density in (phi, psi)
                     for labels_set in density.entries for lbl in labels_set})
    max_card = max((len(ls) for density in (phi, psi)
                    for ls in density.entries), default=0)

    def integrand(pairs):
        value = phi.belief_density(pairs) * psi.belief_density(pairs)
        return value * K ** len(pairs)

    grid = np.linspace(-half_width, half_width, grid_points)
    return set_integral_oracle(integrand, grid, labels, max_card)


# ---- battery ----------------------------------------------------------------------


def _check_pair_integral(rng):
    a = GaussianComponent(1.0, [0.3], [[1.2]])
    b = GaussianComponent(1.0, [-0.8], [[0.7]])
    closed = gaussian_pair_integral(a, b)
    quad = quadrature_product_integral_1d(
        lambda x: gaussian_pdf_1d(x, 0.3, 1.2),
        lambda x: gaussian_pdf_1d(x, -0.8, 0.7), -30, 30)
    err = abs(closed - quad) / quad
    return err < 1e-9, f"relative error {err:.2e}"


def _check_zeta_oracle(rng):
    worst = 0.0
    for _ in range(5):
        phi = random_mdglmb_1d(rng)
        psi = random_mdglmb_1d(rng)
        closed = zeta(phi, psi)
        oracle = zeta_oracle(phi, psi)
        if oracle > 0:
            worst = max(worst, abs(closed - oracle) / oracle)
    return worst < 1e-3, f"worst relative error {worst:.2e}"


def _check_divergence_axioms(rng):
    worst_sym, worst_neg, worst_self = 0.0, 0.0, 0.0
    for _ in range(50):
        phi = random_mdglmb_1d(rng)
        psi = random_mdglmb_1d(rng)
        d_pq = cs_divergence(phi, psi)
        d_qp = cs_divergence(psi, phi)
        if math.isfinite(d_pq):
            worst_sym = max(worst_sym, abs(d_pq - d_qp))
            worst_neg = max(worst_neg, -d_pq)
        worst_self = max(worst_self, abs(cs_divergence(phi, phi)))
    ok = worst_sym < 1e-12 and worst_neg < 1e-9 and worst_self < 1e-9
    return ok, (f"symmetry {worst_sym:.1e}, negativity {worst_neg:.1e}, "
                f"self {worst_self:.1e}")


def _check_gci(rng):
    lbl = TrackLabel(0, 0)
    m1, p1 = 0.4, 1.3
    m2, p2 = -0.9, 0.6
    mix1 = LabeledGaussianMixture.single(lbl, [m1], [[p1]])
    mix2 = LabeledGaussianMixture.single(lbl, [m2], [[p2]])
    weights = FusionWeights((0.5, 0.5))
    fused, integral = weighted_gm_power_product([mix1, mix2], weights)
    p_info = 1.0 / (0.5 / p1 + 0.5 / p2)
    m_info = p_info * (0.5 * m1 / p1 + 0.5 * m2 / p2)
    comp = fused.components[0]
    err_mean = abs(comp.mean[0] - m_info)
    err_cov = abs(comp.cov[0, 0] - p_info)
    quad, _, _ = quadrature_power_product_1d(
        [lambda x: gaussian_pdf_1d(x, m1, p1), lambda x: gaussian_pdf_1d(x, m2, p2)],
        [0.5, 0.5], -40, 40)
    err_int = abs(integral - quad) / quad
    ok = err_mean < 1e-9 and err_cov < 1e-9 and err_int < 1e-6
    return ok, f"mean {err_mean:.1e}, cov {err_cov:.1e}, integral {err_int:.1e}"


def _check_update_oracle(rng):
    sensor = toy_sensor()
    params = FilterParams(max_hypotheses=100000, hypothesis_weight_floor=0.0)
    worst = 0.0
    for n_tracks, n_meas in [(1, 1), (2, 2), (3, 2)]:
        predicted = random_delta_glmb(rng, n_tracks)
        states = rng.uniform(-600, 600, size=(n_meas, 4))
        scan = np.array([sensor.measurement_of(s) for s in states]) \
            if n_meas else np.zeros((0, 2))
        posterior = update(predicted, scan, sensor, params)
        oracle = exhaustive_update_weights(predicted, scan, sensor)
        logs = np.array(sorted(lw for _, _, lw in oracle))
        from scipy.special import logsumexp
        expect = np.exp(logs - logsumexp(logs))
        got = np.array(sorted(h.weight for h in posterior.hypotheses))
        if len(expect) != len(got):
            return False, f"hypothesis count {len(got)} vs {len(expect)}"
        worst = max(worst, float(np.max(np.abs(got - expect) / np.maximum(expect, 1e-300))))
    return worst < 1e-9, f"worst relative weight error {worst:.2e}"


def _check_ospa(rng):
    worst = 0.0
    params = OspaParams(100.0, 2.0)
    for _ in range(50):
        x = rng.uniform(-500, 500, size=(int(rng.integers(0, 6)), 2))
        y = rng.uniform(-500, 500, size=(int(rng.integers(0, 6)), 2))
        enum = ospa(x, y, params, assignment="enum")
        solver = ospa(x, y, params, assignment="solver")
        worst = max(worst, abs(enum - solver))
    boundary = ospa(np.zeros((0, 2)), np.zeros((0, 2)), params) == 0.0 \
        and ospa(np.zeros((0, 2)), rng.uniform(-1, 1, (3, 2)), params) == params.cutoff
    return worst < 1e-12 and boundary, f"worst route mismatch {worst:.2e}"


def run_battery(seed: int = 0) -> int:
    """Run every oracle check; print one line each; return failure count."""
    checks = [
        ("gaussian pair integral vs quadrature", _check_pair_integral),
        ("closed-form zeta vs set-integral oracle", _check_zeta_oracle),
        ("divergence axioms", _check_divergence_axioms),
        ("GCI fusion vs information form and quadrature", _check_gci),
        ("ranked-assignment update vs exhaustive enumeration", _check_update_oracle),
        ("OSPA enumeration vs solver", _check_ospa),
    ]
    failures = 0
    for name, check in checks:
        rng = np.random.default_rng(seed)
        try:
            ok, detail = check(rng)
        except Exception as exc:  # noqa: BLE001 - report, keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        status = "PASS" if ok else "FAIL"
        failures += 0 if ok else 1
        print(f"{status}  {name} ({detail})")
    return failures
