"""One decision epoch of divergence-rewarded sensor control.

Tracks the default 4-target scenario up to the first decision at 10 s,
then shows the expected rewards both decision algorithms assign to the
candidate course changes and which joint action each one picks.

    python demos/control_demo.py
"""

import math

from rfscontrol.config import default_scenario
from rfscontrol.control import ControlModels, idm_select, jdm_select
from rfscontrol.core import DeltaGlmbDensity
from rfscontrol.filter import truncate_density, restrict_to_label_sets
from rfscontrol.harness import (
    FilterBank,
    _STREAM_SENSOR,
    _STREAM_TRUTH,
    _reduced_marginal,
    _rng,
    run_scan_cycle,
)
from rfscontrol.world import GroundTruth, measure, propagate_targets


def main():
    cfg = default_scenario()
    bank = FilterBank(cfg.build_motion(), cfg.build_birth(),
                      cfg.build_filter_params(), cfg.build_fusion_weights(),
                      cfg.birth_scans())
    sensors = cfg.build_sensors()
    truth = GroundTruth(cfg.build_targets())
    entropy = (2026, 0)
    truth_rng = _rng(entropy, _STREAM_TRUTH)
    sensor_rngs = [_rng(entropy, _STREAM_SENSOR + i) for i in range(len(sensors))]
    locals_ = [DeltaGlmbDensity.empty() for _ in sensors]

    fused = None
    for scan in range(1, 11):
        propagate_targets(truth, bank.motion, truth_rng)
        scans = [measure(truth.alive(scan), s, rng)
                 for s, rng in zip(sensors, sensor_rngs)]
        locals_, fused, estimate = run_scan_cycle(
            bank, locals_, [m.values for m in scans], sensors, scan)
    print(f"After 10 scans the fused estimate holds {len(estimate)} tracks.")

    grid = cfg.build_action_grid()
    control_cfg = cfg.build_control_config()
    params = cfg.build_control_filter_params()
    models = ControlModels(cfg.build_control_motion(), tuple(sensors), params)
    control_fused = _reduced_marginal(fused, params)
    rollouts = [truncate_density(restrict_to_label_sets(d, fused.entries), params)
                for d in locals_]

    idm = idm_select(control_fused, rollouts, grid, control_cfg, models,
                     rng_seed=42, fusion_weights=cfg.build_fusion_weights())
    print()
    print("Independent decision making, per-sensor expected rewards:")
    for i, scores in idm.expected_rewards.items():
        best = max(v for v in scores.values() if math.isfinite(v))
        row = "  ".join(f"{a:+4.0f}:{v:5.2f}{'*' if v == best else ' '}"
                        for a, v in sorted(scores.items()))
        print(f"  sensor {i}: {row}")
    print(f"  IDM picks {idm.actions} "
          f"({idm.pseudo_update_chains} filter rollouts)")

    jdm = jdm_select(control_fused, rollouts, grid, control_cfg, models,
                     rng_seed=42, fusion_weights=cfg.build_fusion_weights())
    finite = {k: v for k, v in jdm.expected_rewards.items() if math.isfinite(v)}
    top = sorted(finite.items(), key=lambda kv: -kv[1])[:5]
    print()
    print("Joint decision making over the 13 x 13 action grid, top 5:")
    for (a1, a2), value in top:
        print(f"  ({a1:+4.0f}, {a2:+4.0f}): expected reward {value:.3f}")
    print(f"  JDM picks {jdm.actions} ({jdm.pseudo_update_chains} rollouts, "
          f"{jdm.fused_reward_evaluations} fused reward evaluations)")


if __name__ == "__main__":
    main()
