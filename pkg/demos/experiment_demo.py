"""Seeded Monte Carlo comparison of control strategies, desk-sized.

Runs random vs IDM vs JDM on a reduced scenario with paired truth seeds,
writes the CSV/JSON artifacts the CLI produces, and prints the per-scan
mean OSPA.  The full-scale run is `rfscontrol compare --runs 25`.

    python demos/experiment_demo.py
"""

from pathlib import Path

from rfscontrol.config import default_scenario
from rfscontrol.harness import (
    run_compare,
    summarize,
    write_results_csv,
    write_rewards_json,
    write_summary_json,
)


def main():
    cfg = default_scenario()
    # shrink to a quick desk run: fewer scans, one decision, lighter control
    cfg.schedule = {"num_scans": 16, "decision_scans": [6], "birth_scans": [1]}
    cfg.control = {**cfg.control, "num_samples": 8, "horizon_steps": 3,
                   "action_set_deg": [-90.0, -30.0, 0.0, 30.0, 90.0]}
    cfg.validate()

    runs, seed = 3, 11
    print(f"Running {runs} paired Monte Carlo runs per strategy...")
    experiments = run_compare(cfg, runs=runs, base_seed=seed, paired=True)

    out = Path("demo_out")
    out.mkdir(exist_ok=True)
    write_results_csv(out / "results.csv", experiments, len(cfg.sensors))
    write_rewards_json(out / "rewards.json", experiments)
    summary = summarize(cfg, experiments, seed, paired=True)
    write_summary_json(out / "summary.json", summary)
    print(f"Artifacts written to {out}/: results.csv, rewards.json, summary.json")

    print()
    print("scan | " + " | ".join(f"{e.strategy:>7}" for e in experiments))
    matrices = {e.strategy: e.ospa_matrix() for e in experiments}
    for scan in range(cfg.schedule["num_scans"]):
        row = " | ".join(f"{matrices[e.strategy][:, scan].mean():7.1f}"
                         for e in experiments)
        print(f"{scan + 1:4d} | {row}")
    print()
    for e in experiments:
        mean = matrices[e.strategy].mean()
        print(f"{e.strategy:>7}: mean OSPA {mean:6.2f} m over "
              f"{len(e.ok_runs())} runs")


if __name__ == "__main__":
    main()
