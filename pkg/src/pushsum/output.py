"""Bit-stable CSV/JSON emission and re-analysis of saved runs.

Schemas are versioned by a leading comment line. Floats are written with
17 significant digits, which round-trips doubles exactly, so re-running a
command with identical inputs reproduces byte-identical numeric fields.

    trace-v1    trial,t,i,x,y,z,err,min_y,lambda_prod,f
    timeline-v1 trial,q,k_q,l_q,lambda_q   (l/lambda filled when q closes
                                            a group of n renewals)
    summary-v1  t,mean_ln_err_<i>...,mean_ln_err_max,mean_lambda,
                mean_ln_inv_y_max,rate_bound,margin,floored,violations
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .ergodicity import MixingTimeline
from .montecarlo import ExperimentSummary, TrialTrace

__all__ = [
    "TRACE_SCHEMA",
    "TIMELINE_SCHEMA",
    "SUMMARY_SCHEMA",
    "fmt",
    "write_trace_csv",
    "write_timeline_csv",
    "write_summary_csv",
    "write_summary_json",
    "write_plot_data_csv",
    "read_trace_csv",
    "read_timeline_csv",
    "AnalysisReport",
    "analyze_saved_run",
]

TRACE_SCHEMA = "pushsum trace-v1"
TIMELINE_SCHEMA = "pushsum timeline-v1"
SUMMARY_SCHEMA = "pushsum summary-v1"


def fmt(x: float) -> str:
    """Round-trip-exact decimal rendering of a double."""
    return format(float(x), ".17g")


def _open_writer(path: Path, schema: str):
    fh = path.open("w", newline="")
    fh.write(f"# {schema}\n")
    return fh, csv.writer(fh)


def write_trace_csv(path: str | Path, trace: TrialTrace) -> None:
    path = Path(path)
    z = trace.z
    err = trace.err
    min_y = trace.min_y
    fh, writer = _open_writer(path, TRACE_SCHEMA)
    with fh:
        writer.writerow(
            ["trial", "t", "i", "x", "y", "z", "err", "min_y", "lambda_prod", "f"]
        )
        for t in range(trace.horizon + 1):
            f_txt = fmt(trace.f[t]) if trace.f is not None else ""
            for i in range(trace.n):
                writer.writerow(
                    [
                        trace.trial_id,
                        t,
                        i,
                        fmt(trace.x[t, i]),
                        fmt(trace.y[t, i]),
                        fmt(z[t, i]),
                        fmt(err[t]),
                        fmt(min_y[t]),
                        fmt(trace.lam[t]),
                        f_txt,
                    ]
                )


def write_timeline_csv(path: str | Path, trace: TrialTrace) -> None:
    path = Path(path)
    tl = trace.timeline
    fh, writer = _open_writer(path, TIMELINE_SCHEMA)
    with fh:
        writer.writerow(["trial", "q", "k_q", "l_q", "lambda_q"])
        for q in range(1, len(tl.k)):
            if q % tl.n == 0:
                g = q // tl.n - 1
                l_txt, lam_txt = str(tl.l[g]), fmt(tl.lam[g])
            else:
                l_txt, lam_txt = "", ""
            writer.writerow([trace.trial_id, q, tl.k[q], l_txt, lam_txt])


def _summary_rate_columns(summary: ExperimentSummary, t: int) -> tuple[str, str]:
    if summary.rate is None or t - 1 < summary.rate.t_min:
        return "", ""
    bound = summary.rate.c0 - summary.rate.c1 * (t - 1)
    margin = bound - float(summary.mean_ln_err_node[t].max())
    return fmt(bound), fmt(margin)


def write_summary_csv(path: str | Path, summary: ExperimentSummary) -> None:
    path = Path(path)
    viol_by_t: dict[int, int] = {}
    for v in summary.violations:
        viol_by_t[v.t] = viol_by_t.get(v.t, 0) + 1
    fh, writer = _open_writer(path, SUMMARY_SCHEMA)
    with fh:
        header = (
            ["t"]
            + [f"mean_ln_err_{i}" for i in range(summary.n)]
            + ["mean_ln_err_max", "mean_lambda", "mean_ln_inv_y_max",
               "rate_bound", "margin", "floored", "violations"]
        )
        writer.writerow(header)
        for t in range(1, summary.horizon + 1):
            bound_txt, margin_txt = _summary_rate_columns(summary, t)
            writer.writerow(
                [t]
                + [fmt(summary.mean_ln_err_node[t, i]) for i in range(summary.n)]
                + [
                    fmt(summary.mean_ln_err_max[t]),
                    fmt(summary.mean_lambda[t]),
                    fmt(summary.mean_ln_inv_y[t].max()),
                    bound_txt,
                    margin_txt,
                    int(summary.floored_max[t]),
                    viol_by_t.get(t, 0),
                ]
            )


def _config_echo(summary: ExperimentSummary) -> dict:
    cfg = summary.config
    return {
        "n": cfg.n,
        "horizon": cfg.horizon,
        "trials": cfg.trials,
        "seed": cfg.seed,
        "family": cfg.family,
        "B": cfg.B,
        "epsilon": cfg.epsilon,
        "x0": list(map(float, summary.x0)),
        "diagnostics": sorted(cfg.diagnostics),
        "threshold": cfg.threshold,
        "ln_floor": cfg.ln_floor,
    }


def write_summary_json(path: str | Path, summary: ExperimentSummary) -> None:
    rate = None
    if summary.rate is not None:
        rate = {
            "p": summary.rate.p,
            "c0": summary.rate.c0,
            "c1": summary.rate.c1,
            "t_min": summary.rate.t_min,
        }
    crossings = summary.first_crossings
    payload = {
        "schema": SUMMARY_SCHEMA,
        "config": _config_echo(summary),
        "rate_constants": rate,
        "trials": summary.trials,
        "truncated_trials": summary.truncated_trials,
        "floored_samples_total": int(summary.floored_node.sum()),
        "violations": [
            {
                "kind": v.kind,
                "trial": v.trial_id,
                "t": v.t,
                "i": v.i,
                "value": v.value,
                "bound": v.bound,
            }
            for v in summary.violations
        ],
        "convergence": {
            "threshold": summary.config.threshold,
            "fraction": summary.converged_fraction,
            "median_first_crossing": (
                float(np.median(crossings[crossings >= 0]))
                if (crossings >= 0).any()
                else None
            ),
        },
        "rate_ok": summary.rate_ok() if summary.rate is not None else None,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_plot_data_csv(path: str | Path, summary: ExperimentSummary) -> None:
    """Tidy long-format series for external plotting."""
    fh, writer = _open_writer(Path(path), "pushsum plotdata-v1")
    with fh:
        writer.writerow(["t", "series", "value"])
        for t in range(1, summary.horizon + 1):
            for i in range(summary.n):
                writer.writerow([t, f"mean_ln_err_{i}", fmt(summary.mean_ln_err_node[t, i])])
            writer.writerow([t, "mean_ln_err_max", fmt(summary.mean_ln_err_max[t])])
            writer.writerow([t, "mean_lambda", fmt(summary.mean_lambda[t])])
            bound_txt, _ = _summary_rate_columns(summary, t)
            if bound_txt:
                writer.writerow([t, "rate_bound", bound_txt])


def _read_csv(path: Path, schema: str) -> tuple[list[str], list[list[str]]]:
    with path.open() as fh:
        first = fh.readline().strip()
        if first != f"# {schema}":
            raise ConfigError(f"{path}: expected schema '# {schema}', got {first!r}")
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader if row]


def read_trace_csv(path: str | Path) -> dict:
    """Trace file back as arrays keyed by column name plus shape info."""
    path = Path(path)
    header, rows = _read_csv(path, TRACE_SCHEMA)
    col = {name: idx for idx, name in enumerate(header)}
    ts = sorted({int(r[col["t"]]) for r in rows})
    ns = sorted({int(r[col["i"]]) for r in rows})
    horizon, n = ts[-1], len(ns)
    if ts != list(range(horizon + 1)):
        raise ConfigError(f"{path}: trace rows do not cover t = 0..{horizon}")
    arrays = {
        "x": np.empty((horizon + 1, n)),
        "y": np.empty((horizon + 1, n)),
        "z": np.empty((horizon + 1, n)),
        "err": np.empty(horizon + 1),
        "min_y": np.empty(horizon + 1),
        "lambda_prod": np.empty(horizon + 1),
    }
    has_f = any(r[col["f"]] != "" for r in rows)
    f = np.full(horizon + 1, np.nan) if has_f else None
    trial = int(rows[0][col["trial"]])
    for r in rows:
        t, i = int(r[col["t"]]), int(r[col["i"]])
        arrays["x"][t, i] = float(r[col["x"]])
        arrays["y"][t, i] = float(r[col["y"]])
        arrays["z"][t, i] = float(r[col["z"]])
        arrays["err"][t] = float(r[col["err"]])
        arrays["min_y"][t] = float(r[col["min_y"]])
        arrays["lambda_prod"][t] = float(r[col["lambda_prod"]])
        if has_f and r[col["f"]] != "":
            f[t] = float(r[col["f"]])
    arrays["f"] = f
    arrays["trial"] = trial
    arrays["horizon"] = horizon
    arrays["n"] = n
    return arrays


def read_timeline_csv(path: str | Path) -> list[int]:
    """Renewal times (including the implicit k_0 = 0)."""
    path = Path(path)
    header, rows = _read_csv(path, TIMELINE_SCHEMA)
    col = {name: idx for idx, name in enumerate(header)}
    ks = [0] + [int(r[col["k_q"]]) for r in rows]
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ConfigError(f"{path}: renewal times must be strictly increasing")
    return ks


@dataclass
class AnalysisReport:
    """Re-derived diagnostics of a saved trace."""

    trace_path: str
    horizon: int
    n: int
    checks: int = 0
    issues: list[str] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.issues


def analyze_saved_run(
    trace_path: str | Path, timeline_path: str | Path | None = None
) -> AnalysisReport:
    """Recheck a saved trace: ratio consistency, error recomputation,
    contraction-product monotonicity and cross-check against the saved
    timeline, the pathwise error bound, and f-metric behavior if present."""
    data = read_trace_csv(trace_path)
    horizon, n = data["horizon"], data["n"]
    report = AnalysisReport(trace_path=str(trace_path), horizon=horizon, n=n)

    z = data["x"] / data["y"]
    if not np.allclose(z, data["z"], rtol=0, atol=1e-12):
        report.issues.append("z column does not equal x / y")
    report.checks += 1

    xbar = float(data["x"][0].mean())
    err = np.abs(z - xbar).max(axis=1)
    if not np.allclose(err, data["err"], rtol=0, atol=1e-12):
        report.issues.append("err column does not equal max_i |z_i - xbar|")
    report.checks += 1

    lam = data["lambda_prod"]
    if np.any(np.diff(lam) > 0):
        report.issues.append("lambda_prod column is not non-increasing")
    report.checks += 1

    if timeline_path is not None:
        ks = read_timeline_csv(timeline_path)
        tl = MixingTimeline(n=n, horizon=horizon, k=ks, truncated=ks[-1] < horizon)
        rebuilt = tl.lambda_at_many(np.arange(horizon + 1))
        if not np.array_equal(rebuilt, lam):
            report.issues.append("lambda_prod column disagrees with the timeline")
        report.checks += 1
        total, per_group = tl.divergence_diagnostic()
        report.stats["renewal_groups"] = tl.groups
        report.stats["divergence_partial_sum"] = total
        report.stats["divergence_per_group"] = per_group

    x0_l1 = float(np.abs(data["x"][0]).sum())
    bound_grid = 2.0 * x0_l1 * lam[:-1, None] / data["y"][1:]
    err_i = np.abs(z - xbar)
    worst = float((err_i[1:] - bound_grid).max()) if horizon >= 1 else -math.inf
    if worst > 1e-9:
        report.issues.append(f"pathwise bound violated by {worst:.3e}")
    report.checks += 1

    if data["f"] is not None:
        f = data["f"]
        if np.any(np.diff(f) > 1e-12):
            report.issues.append("f column is not non-increasing")
        x0_inf = float(np.abs(data["x"][0]).max())
        sup = np.abs(z - xbar).max(axis=1)
        if np.any(sup > x0_inf * f + 1e-9):
            report.issues.append("f error bound violated")
        report.checks += 2

    return report
