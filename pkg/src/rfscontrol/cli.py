"""Command-line harness: simulate, compare, validate.

simulate  one strategy over seeded Monte Carlo runs
compare   all three strategies (random / idm / jdm) on a shared run grid
validate  run the oracle and property battery and report pass/fail

Outputs land in --out as results.csv, summary.json and rewards.json (all
deterministic for a given config and seed); timings go to timing.json only
when --with-timing is passed.  Failures print a machine-readable JSON error
and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ScenarioConfig, default_scenario
from .harness import (
    STRATEGIES,
    run_compare,
    run_experiment,
    summarize,
    write_results_csv,
    write_rewards_json,
    write_summary_json,
    write_timing_json,
    write_world_csv,
)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None,
                        help="scenario JSON (defaults to the built-in scenario)")
    parser.add_argument("--runs", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, default=Path("out"))
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--with-timing", action="store_true",
                        help="also write non-deterministic timing.json")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rfscontrol",
        description="multi-sensor multi-target tracking control experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one strategy")
    _add_common(sim)
    sim.add_argument("--strategy", choices=STRATEGIES, default="jdm")
    sim.add_argument("--world-out", type=Path, default=None,
                     help="also export truth/measurement log CSV")

    cmp_ = sub.add_parser("compare", help="run all three strategies")
    _add_common(cmp_)
    cmp_.add_argument("--paired", action="store_true",
                      help="share truth/noise seeds across strategies")

    val = sub.add_parser("validate", help="run the oracle battery")
    val.add_argument("--seed", type=int, default=0)
    return parser


def _load_config(path: Path | None) -> ScenarioConfig:
    if path is None:
        return default_scenario()
    return ScenarioConfig.load(path)


def _cmd_simulate(args) -> int:
    config = _load_config(args.config)
    experiment = run_experiment(config, args.strategy, args.runs, args.seed,
                                threads=args.threads,
                                log_world=args.world_out is not None)
    args.out.mkdir(parents=True, exist_ok=True)
    experiments = [experiment]
    write_results_csv(args.out / "results.csv", experiments, len(config.sensors))
    write_rewards_json(args.out / "rewards.json", experiments)
    summary = summarize(config, experiments, args.seed, paired=False)
    write_summary_json(args.out / "summary.json", summary)
    if args.with_timing:
        write_timing_json(args.out / "timing.json", experiments)
    if args.world_out is not None:
        rows = [row for run in experiment.ok_runs() for row in run.world]
        write_world_csv(args.world_out, rows)
    failed = len(experiment.failed_runs())
    print(f"simulate {args.strategy}: {len(experiment.ok_runs())} runs ok, "
          f"{failed} failed -> {args.out}")
    return 0 if failed == 0 else 1


def _cmd_compare(args) -> int:
    config = _load_config(args.config)
    paired = args.paired or bool(config.seed_policy.get("paired_noise", False))
    experiments = run_compare(config, args.runs, args.seed,
                              threads=args.threads, paired=paired)
    args.out.mkdir(parents=True, exist_ok=True)
    write_results_csv(args.out / "results.csv", experiments, len(config.sensors))
    write_rewards_json(args.out / "rewards.json", experiments)
    summary = summarize(config, experiments, args.seed, paired=paired)
    write_summary_json(args.out / "summary.json", summary)
    if args.with_timing:
        write_timing_json(args.out / "timing.json", experiments)
    failed = sum(len(e.failed_runs()) for e in experiments)
    for experiment in experiments:
        entry = summary["strategies"][experiment.strategy]
        mean = entry.get("mean_ospa_overall")
        mean_txt = f"{mean:.2f}" if mean is not None else "n/a"
        print(f"{experiment.strategy:>7}: mean OSPA {mean_txt} m "
              f"({entry['runs_ok']} runs ok)")
    return 0 if failed == 0 else 1


def _cmd_validate(args) -> int:
    from .selfcheck import run_battery

    failures = run_battery(args.seed)
    return 0 if failures == 0 else 1


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"simulate": _cmd_simulate, "compare": _cmd_compare,
                "validate": _cmd_validate}
    try:
        return handlers[args.command](args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(json.dumps({"error": str(exc), "type": type(exc).__name__}))
        return 2


if __name__ == "__main__":
    sys.exit(main())
