"""Command-line harness.

Commands:
    simulate      one trial, full trace + timeline CSVs
    montecarlo    multi-trial experiment, summary CSV/JSON
    analyze       recheck a saved trace (and timeline) for violations
    verify-bounds run every inequality suite, machine-readable report
    validate      schedule/Assumption checks only

Every command exits 0 on success with zero violations and 1 otherwise,
writing a machine-readable JSON report of any violations. The master
seed comes from ``--seed`` if given, else the ``PUSHSUM_SEED``
environment variable, else the config file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import Config, parse_config, validate_config
from .errors import ConfigError, PushSumError
from .montecarlo import run_experiment, run_trial
from .output import (
    analyze_saved_run,
    write_plot_data_csv,
    write_summary_csv,
    write_summary_json,
    write_timeline_csv,
    write_trace_csv,
)
from .verify import run_all_suites

SEED_ENV_VAR = "PUSHSUM_SEED"


def _load_config(args) -> Config:
    config = parse_config(args.config)
    seed = args.seed
    if seed is None and SEED_ENV_VAR in os.environ:
        raw = os.environ[SEED_ENV_VAR]
        try:
            seed = int(raw)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR}={raw!r} is not an integer") from exc
    if seed is not None:
        config = config.with_(seed=seed)
    if getattr(args, "workers", None):
        config = config.with_(workers=args.workers)
    if getattr(args, "out", None):
        config = config.with_(out=args.out)
    return config


def _out_dir(config: Config, args) -> Path:
    out = Path(args.out or config.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit_violation_report(path: Path, violations: list[dict]) -> None:
    path.write_text(json.dumps({"violations": violations}, indent=2, sort_keys=True) + "\n")


def cmd_validate(args) -> int:
    config = _load_config(args)
    report = validate_config(config)
    if report.ok:
        print("schedule valid: all invariants hold")
        return 0
    for issue in report.issues:
        print(f"violation [{issue.kind}] t={issue.t} i={issue.i} j={issue.j}: {issue.message}")
    return 1


def cmd_simulate(args) -> int:
    config = _load_config(args)
    trace = run_trial(config, args.trial)
    out = _out_dir(config, args)
    write_trace_csv(out / "trace.csv", trace)
    write_timeline_csv(out / "timeline.csv", trace)
    violations = [
        {"kind": v.kind, "trial": v.trial_id, "t": v.t, "i": v.i,
         "value": v.value, "bound": v.bound}
        for v in trace.violations
    ]
    _emit_violation_report(out / "violations.json", violations)
    total, per_group = trace.timeline.divergence_diagnostic()
    print(f"trace written to {out / 'trace.csv'} ({trace.horizon} steps)")
    print(
        f"renewal groups: {trace.timeline.groups}, contraction-series partial sum "
        f"{total:.6g} ({per_group:.3g} per group)"
    )
    if violations:
        print(f"{len(violations)} violations; see {out / 'violations.json'}")
        return 1
    return 0


def cmd_montecarlo(args) -> int:
    config = _load_config(args)
    summary = run_experiment(config)
    out = _out_dir(config, args)
    write_summary_csv(out / "summary.csv", summary)
    write_summary_json(out / "summary.json", summary)
    if args.emit_plot_data:
        write_plot_data_csv(out / "plotdata.csv", summary)
    print(
        f"{summary.trials} trials, horizon {summary.horizon}: "
        f"converged fraction {summary.converged_fraction:.3f}, "
        f"{len(summary.violations)} violations"
    )
    if summary.violations:
        return 1
    return 0


def cmd_analyze(args) -> int:
    report = analyze_saved_run(args.trace, args.timeline)
    payload = {
        "trace": report.trace_path,
        "horizon": report.horizon,
        "n": report.n,
        "checks": report.checks,
        "issues": report.issues,
        "stats": report.stats,
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "analysis.json").write_text(json.dumps(payload, indent=2) + "\n")
    print(json.dumps(payload, indent=2))
    return 0 if report.ok else 1


def cmd_verify_bounds(args) -> int:
    seed = args.seed if args.seed is not None else int(os.environ.get(SEED_ENV_VAR, "1"))
    results = run_all_suites(profile=args.profile, seed=seed)
    for result in results:
        print(result.line())
    payload = {
        "profile": args.profile,
        "seed": seed,
        "suites": [
            {
                "name": r.name,
                "ok": r.ok,
                "checked": r.checked,
                "violations": r.violations,
                "stats": r.stats,
                "runtime_s": round(r.runtime_s, 3),
            }
            for r in results
        ],
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "verify-bounds.json").write_text(json.dumps(payload, indent=2) + "\n")
    ok = all(r.ok for r in results)
    print("all suites passed" if ok else "FAILURES present")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pushsum",
        description="Push-sum consensus simulator and bound-verification harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="config file path")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", default=None, help="output directory")

    p_sim = sub.add_parser("simulate", help="run one trial and write its trace")
    add_common(p_sim)
    p_sim.add_argument("--trial", type=int, default=0, help="trial index (stream id)")
    p_sim.set_defaults(func=cmd_simulate)

    p_mc = sub.add_parser("montecarlo", help="run a multi-trial experiment")
    add_common(p_mc)
    p_mc.add_argument("--workers", type=int, default=None, help="parallel workers")
    p_mc.add_argument(
        "--emit-plot-data", action="store_true", help="also write tidy plot data CSV"
    )
    p_mc.set_defaults(func=cmd_montecarlo)

    p_an = sub.add_parser("analyze", help="recheck a saved trace")
    p_an.add_argument("--trace", required=True, help="trace CSV from simulate")
    p_an.add_argument("--timeline", default=None, help="timeline CSV from simulate")
    p_an.add_argument("--out", default=None)
    p_an.set_defaults(func=cmd_analyze)

    p_vb = sub.add_parser("verify-bounds", help="run all inequality suites")
    p_vb.add_argument(
        "--profile", choices=("quick", "acceptance"), default="quick",
        help="scale of the suites (quick smoke run vs. full acceptance scale)",
    )
    p_vb.add_argument("--seed", type=int, default=None)
    p_vb.add_argument("--out", default=None)
    p_vb.set_defaults(func=cmd_verify_bounds)

    p_val = sub.add_parser("validate", help="check schedule invariants")
    add_common(p_val)
    p_val.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PushSumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
