import numpy as np
import pytest

from pushsum.errors import ConfigError
from pushsum.montecarlo import run_experiment, run_trial
from pushsum.output import (
    analyze_saved_run,
    fmt,
    read_timeline_csv,
    read_trace_csv,
    write_plot_data_csv,
    write_summary_csv,
    write_summary_json,
    write_timeline_csv,
    write_trace_csv,
)
from pushsum.verify import family_config


@pytest.fixture(scope="module")
def small_trace():
    cfg = family_config(
        3, "two-phase", epsilon=0.5, trials=1, horizon=120, seed=31,
        diagnostics=frozenset({"f-metric"}),
    )
    return run_trial(cfg, 0)


@pytest.fixture(scope="module")
def small_summary():
    cfg = family_config(2, "bernoulli", epsilon=0.5, trials=10, horizon=60, seed=5)
    return run_experiment(cfg)


def test_fmt_round_trips_doubles():
    rng = np.random.default_rng(1)
    for x in rng.random(200) * rng.choice([1e-8, 1.0, 1e12], size=200):
        assert float(fmt(x)) == x
    assert float(fmt(1 / 3)) == 1 / 3


def test_trace_round_trip(tmp_path, small_trace):
    path = tmp_path / "trace.csv"
    write_trace_csv(path, small_trace)
    data = read_trace_csv(path)
    assert data["horizon"] == small_trace.horizon
    assert data["n"] == 3
    assert np.array_equal(data["x"], small_trace.x)
    assert np.array_equal(data["y"], small_trace.y)
    assert np.array_equal(data["lambda_prod"], small_trace.lam)
    assert np.array_equal(data["f"], small_trace.f)


def test_timeline_round_trip(tmp_path, small_trace):
    path = tmp_path / "timeline.csv"
    write_timeline_csv(path, small_trace)
    ks = read_timeline_csv(path)
    assert ks == small_trace.timeline.k


def test_schema_line_enforced(tmp_path, small_trace):
    path = tmp_path / "trace.csv"
    write_trace_csv(path, small_trace)
    assert path.read_text().startswith("# pushsum trace-v1\n")
    bad = tmp_path / "bad.csv"
    bad.write_text("# other schema\na,b\n")
    with pytest.raises(ConfigError):
        read_trace_csv(bad)


def test_analyze_clean_run(tmp_path, small_trace):
    trace_path = tmp_path / "trace.csv"
    timeline_path = tmp_path / "timeline.csv"
    write_trace_csv(trace_path, small_trace)
    write_timeline_csv(timeline_path, small_trace)
    report = analyze_saved_run(trace_path, timeline_path)
    assert report.ok, report.issues
    assert report.checks >= 6


def test_analyze_detects_tampering(tmp_path, small_trace):
    trace_path = tmp_path / "trace.csv"
    write_trace_csv(trace_path, small_trace)
    lines = trace_path.read_text().splitlines()
    # corrupt one z entry in the middle of the file
    row = lines[40].split(",")
    row[5] = fmt(float(row[5]) + 0.25)
    lines[40] = ",".join(row)
    trace_path.write_text("\n".join(lines) + "\n")
    report = analyze_saved_run(trace_path)
    assert not report.ok
    assert any("z column" in issue for issue in report.issues)


def test_summary_csv_deterministic_bytes(tmp_path, small_summary):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_summary_csv(a, small_summary)
    write_summary_csv(b, small_summary)
    assert a.read_bytes() == b.read_bytes()
    header = a.read_text().splitlines()[1].split(",")
    assert header[:4] == ["t", "mean_ln_err_0", "mean_ln_err_1", "mean_ln_err_max"]
    assert "rate_bound" in header and "violations" in header


def test_summary_json_content(tmp_path, small_summary):
    path = tmp_path / "summary.json"
    write_summary_json(path, small_summary)
    import json

    payload = json.loads(path.read_text())
    assert payload["schema"] == "pushsum summary-v1"
    assert payload["config"]["n"] == 2
    assert payload["rate_constants"]["p"] == 0.25
    assert payload["violations"] == []
    assert payload["convergence"]["fraction"] == 1.0


def test_plot_data_emission(tmp_path, small_summary):
    path = tmp_path / "plot.csv"
    write_plot_data_csv(path, small_summary)
    text = path.read_text().splitlines()
    assert text[0] == "# pushsum plotdata-v1"
    assert text[1] == "t,series,value"
    series = {line.split(",")[1] for line in text[2:]}
    assert {"mean_ln_err_0", "mean_ln_err_max", "mean_lambda", "rate_bound"} <= series
