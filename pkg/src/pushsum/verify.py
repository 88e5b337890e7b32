"""Inequality suites: every bound and structural property of the library,
runnable at the acceptance scale or a reduced quick scale.

Each suite returns a ``SuiteResult`` with the number of checks performed,
human-readable violation strings (empty on conforming runs), and summary
statistics. The CLI ``verify-bounds`` command composes all suites; the
acceptance tests drive them one criterion at a time.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import bounds, digraph, ergodicity, randgen, stochmat
from .config import Config
from .montecarlo import (
    ExperimentSummary,
    convergence_census,
    hoeffding_experiment,
    run_experiment,
)
from .randgen import RandomStream

__all__ = [
    "SuiteResult",
    "family_config",
    "default_matrix",
    "suite_default_matrix",
    "suite_f_metric",
    "suite_positivity",
    "suite_contraction",
    "suite_oracle_equivalence",
    "rate_parameter_sets",
    "suite_rate_and_moments",
    "suite_hoeffding",
    "suite_product_max",
    "suite_census",
    "suite_proof_chain",
    "run_all_suites",
]

RATE_PARAMETER_SETS = (
    ("n2-B1-eps1.0", 2, 1, 1.0),
    ("n3-B2-eps0.5", 3, 2, 0.5),
)


@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    violations: list[str] = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    runtime_s: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"[{status}] {self.name}: {self.checked} checks, {len(self.violations)} violations"


def family_config(n: int, family: str, **overrides) -> Config:
    """Configs for the named built-in families used across the suites."""
    if family == "static-cycle":
        ps = randgen.directed_cycle_family(n, overrides.pop("epsilon", 0.5))
        base = Config(n=n, family="static", B=1, epsilon=ps.epsilon, phases=tuple(ps.phases))
    elif family == "two-phase":
        ps = randgen.two_phase_cycle_family(n, overrides.pop("epsilon", 0.5))
        base = Config(
            n=n, family="periodic", B=2, epsilon=ps.epsilon, phases=tuple(ps.phases)
        )
    elif family == "bernoulli":
        eps = overrides.pop("epsilon", 0.5)
        ps = randgen.bernoulli_family(n, eps)
        base = Config(n=n, family="static", B=1, epsilon=eps, phases=tuple(ps.phases))
    else:
        raise ValueError(f"unknown family label {family!r}")
    return base.with_(**overrides) if overrides else base


def default_matrix(trials: int = 100, horizon: int = 1000, seed: int = 1) -> list[tuple[str, Config]]:
    """The default test matrix: n in 2..6 crossed with five families."""
    configs = []
    for n in range(2, 7):
        specs = [
            ("static-cycle", {"epsilon": 0.5}),
            ("two-phase", {"epsilon": 0.5}),
            ("bernoulli", {"epsilon": 0.3}),
            ("bernoulli", {"epsilon": 0.5}),
            ("bernoulli", {"epsilon": 1.0}),
        ]
        for family, kw in specs:
            label = f"n{n}-{family}-eps{kw['epsilon']}"
            cfg = family_config(
                n, family, trials=trials, horizon=horizon, seed=seed, **kw
            )
            configs.append((label, cfg))
    return configs


def suite_default_matrix(
    trials: int = 100, horizon: int = 1000, seed: int = 1
) -> tuple[SuiteResult, SuiteResult]:
    """One pass over the default matrix feeding two criteria: mass
    conservation at every step, and zero pathwise-bound violations."""
    t0 = time.perf_counter()
    conservation = SuiteResult("conservation")
    pathwise = SuiteResult("pathwise-bound")
    for label, cfg in default_matrix(trials=trials, horizon=horizon, seed=seed):
        summary = run_experiment(cfg)
        steps = cfg.trials * cfg.horizon
        conservation.checked += 2 * steps
        pathwise.checked += steps * cfg.n
        for v in summary.violations:
            line = f"{label}: {v.kind} trial={v.trial_id} t={v.t} value={v.value:.3e}"
            if v.kind.startswith("mass"):
                conservation.violations.append(line)
            elif v.kind == "pathwise-bound":
                pathwise.violations.append(line)
            else:
                pathwise.violations.append(line)
    conservation.runtime_s = pathwise.runtime_s = time.perf_counter() - t0
    conservation.stats = {"configs": 25, "trials_each": trials, "horizon": horizon}
    pathwise.stats = dict(conservation.stats)
    return conservation, pathwise


def suite_f_metric(trials: int = 20, horizon: int = 200, seed: int = 2) -> SuiteResult:
    """f-metric monotonicity and error domination on diagnostic runs, n <= 4."""
    t0 = time.perf_counter()
    result = SuiteResult("f-metric")
    for n in (2, 3, 4):
        for family in ("static-cycle", "two-phase", "bernoulli"):
            cfg = family_config(
                n, family, epsilon=0.5, trials=trials, horizon=horizon,
                seed=seed, diagnostics=frozenset({"f-metric"}),
            )
            summary = run_experiment(cfg)
            result.checked += 2 * trials * horizon
            for v in summary.violations:
                if v.kind in ("f-monotone", "f-bound"):
                    result.violations.append(
                        f"n{n}-{family}: {v.kind} trial={v.trial_id} t={v.t}"
                    )
    result.runtime_s = time.perf_counter() - t0
    return result


def suite_positivity(
    sequences: int = 500, windows: int = 200, seed: int = 3
) -> SuiteResult:
    """Positivity of products of n-1 irreducible weight matrices with the
    entry floor n**-(n-1), plus the three windowed entry-bound clauses."""
    t0 = time.perf_counter()
    result = SuiteResult("positivity-entry-bounds")
    rng = np.random.default_rng(seed)
    for trial in range(sequences):
        n = 2 + trial % 5
        mats = [
            stochmat.weight_from_graph(digraph.random_strongly_connected_graph(n, rng))
            for _ in range(max(1, n - 1))
        ]
        prod = stochmat.product_range(mats, 0, len(mats) - 1)
        result.checked += 1
        if not stochmat.is_positive(prod):
            result.violations.append(f"seq {trial}: product of n-1={n - 1} not positive")
        floor = float(n) ** (-(n - 1)) - 1e-12
        if float(prod.entries.min()) < floor:
            result.violations.append(
                f"seq {trial}: entry {prod.entries.min():.3e} below {floor:.3e}"
            )
    for trial in range(windows):
        n = 2 + trial % 4
        length = int(rng.integers(1, 7))
        mats = [
            stochmat.weight_from_graph(digraph.random_strongly_connected_graph(n, rng))
            for _ in range(length)
        ]
        report = stochmat.check_entry_bounds(mats, 0, length - 1, gamma=1.0 / n)
        result.checked += 1
        if not report.ok:
            result.violations.append(
                f"window {trial}: {len(report.violations)} entry-bound violations"
            )
    result.runtime_s = time.perf_counter() - t0
    result.stats = {"sequences": sequences, "windows": windows}
    return result


def suite_contraction(
    trials: int = 50, horizon: int = 500, seed: int = 4
) -> SuiteResult:
    """Pathwise contraction: column spreads of row-stochastic products and
    row spreads of column-stochastic products stay below the accumulated
    contraction factor at every step."""
    t0 = time.perf_counter()
    result = SuiteResult("ergodicity-contraction")
    for trial in range(trials):
        n = 2 + trial % 4  # n in 2..5
        family = randgen.bernoulli_family(n, 0.5) if trial % 2 else randgen.two_phase_cycle_family(n, 0.5)
        stream = RandomStream(seed, trial)
        mats = [randgen.sample_weight_array(family, t, stream) for t in range(horizon)]

        col_tracker = ergodicity.KSequenceTracker(n)
        col_prod = np.eye(n)
        row_tracker = ergodicity.KSequenceTracker(n)
        row_prod = np.eye(n)
        col_ok = row_ok = True
        worst_col = worst_row = -math.inf
        for t, w in enumerate(mats):
            col_prod = w @ col_prod
            col_tracker.ingest(w)
            lam_col = col_tracker.timeline().lambda_at(t)
            dev = float((col_prod.max(axis=1) - col_prod.min(axis=1)).max())
            worst_col = max(worst_col, dev - lam_col)
            if dev > lam_col + 1e-12:
                col_ok = False

            a = w.T
            row_prod = a @ row_prod
            row_tracker.ingest(a)
            lam_row = row_tracker.timeline().lambda_at(t)
            gap = float(stochmat.max_min_column_gap(row_prod).max())
            worst_row = max(worst_row, gap - lam_row)
            if gap > lam_row + 1e-12:
                row_ok = False
            result.checked += 2
        if not col_ok:
            result.violations.append(f"trial {trial}: column contraction exceeded (by {worst_col:.2e})")
        if not row_ok:
            result.violations.append(f"trial {trial}: row contraction exceeded (by {worst_row:.2e})")
    result.runtime_s = time.perf_counter() - t0
    return result


def suite_oracle_equivalence(
    sequences: int = 200, horizon: int = 100, seed: int = 5
) -> SuiteResult:
    """Renewal detection via SCC equals brute-force cut enumeration, exactly."""
    t0 = time.perf_counter()
    result = SuiteResult("renewal-oracle-equivalence")
    rng = np.random.default_rng(seed)
    for trial in range(sequences):
        n = 2 + trial % 5
        mats = []
        for _t in range(horizon):
            pattern = (rng.random((n, n)) < 0.25).astype(float)
            np.fill_diagonal(pattern, 1.0)
            mats.append(pattern / pattern.sum(axis=0))
        tl_scc = ergodicity.compute_k_sequence(mats, mode="scc")
        tl_cut = ergodicity.compute_k_sequence(mats, mode="brute-cut")
        result.checked += 1
        if tl_scc.k != tl_cut.k or tl_scc.truncated != tl_cut.truncated:
            result.violations.append(f"seq {trial} (n={n}): renewal sequences differ")
    result.runtime_s = time.perf_counter() - t0
    return result


def rate_parameter_sets(trials: int = 1000, horizon: int = 2001, seed: int = 6):
    """Configs of the two rate-bound parameter sets.

    The horizon is one above the bound-argument range so that state time
    t+1 exists for every checked t.
    """
    sets = []
    for label, n, B, eps in RATE_PARAMETER_SETS:
        family = "bernoulli" if B == 1 else "two-phase"
        cfg = family_config(
            n, family, epsilon=eps, trials=trials, horizon=horizon, seed=seed
        )
        sets.append((label, cfg))
    return sets


def suite_rate_and_moments(
    trials: int = 1000, horizon: int = 2001, seed: int = 6, grid_size: int = 20
) -> tuple[SuiteResult, SuiteResult, SuiteResult, dict[str, ExperimentSummary]]:
    """One experiment per rate parameter set feeding three criteria:

    - the affine bound on per-node mean log errors (strict, no slack);
    - expected-contraction and expected-log-inverse-weight bounds on a
      grid of valid times, with three standard errors of slack;
    - the weight floor at every detected renewal (zero violations).
    """
    t0 = time.perf_counter()
    rate_result = SuiteResult("rate-bound")
    moment_result = SuiteResult("moment-bounds")
    floor_result = SuiteResult("y-floor")
    summaries: dict[str, ExperimentSummary] = {}
    for label, cfg in rate_parameter_sets(trials=trials, horizon=horizon, seed=seed):
        summary = run_experiment(cfg)
        summaries[label] = summary
        rc = summary.rate
        assert rc is not None

        rows = summary.rate_comparison_rows()
        rate_result.checked += len(rows)
        bad = [(t, m) for (t, _e, _b, m) in rows if m < 0]
        if bad:
            rate_result.violations.append(
                f"{label}: bound violated at t={bad[0][0]} margin={bad[0][1]:.3e}"
            )
        rate_result.stats[f"{label}-min-margin"] = (
            min(m for (_t, _e, _b, m) in rows) if rows else math.inf
        )
        rate_result.stats[f"{label}-floored-total"] = int(summary.floored_node.sum())

        t_lo = math.ceil(rc.t_min)
        t_hi = summary.horizon - 1
        grid = np.unique(np.linspace(t_lo, t_hi, grid_size).astype(int))
        worst_lam = math.inf
        worst_y = math.inf
        slack = cfg.slack_sigmas
        for t in grid:
            lam_bound = bounds.expected_lambda_bound(float(t), cfg.n, cfg.B, rc.p)
            lam_mean = float(summary.mean_lambda[t])
            lam_slack = lam_bound + slack * float(summary.se_lambda[t])
            worst_lam = min(worst_lam, lam_slack - lam_mean)
            moment_result.checked += 1
            if lam_mean > lam_slack:
                moment_result.violations.append(
                    f"{label}: E[lambda] at t={t}: {lam_mean:.4f} > {lam_slack:.4f}"
                )
            y_bound = bounds.expected_log_inv_y_bound(cfg.n, cfg.B, rc.p)
            for i in range(cfg.n):
                mean_liy = float(summary.mean_ln_inv_y[t, i])
                liy_slack = y_bound + slack * float(summary.se_ln_inv_y[t, i])
                worst_y = min(worst_y, liy_slack - mean_liy)
                moment_result.checked += 1
                if mean_liy > liy_slack:
                    moment_result.violations.append(
                        f"{label}: E[ln 1/y_{i}] at t={t}: {mean_liy:.4f} > {liy_slack:.4f}"
                    )
        moment_result.stats[f"{label}-min-lambda-margin"] = worst_lam
        moment_result.stats[f"{label}-min-lny-margin"] = worst_y

        floor_result.checked += trials
        for v in summary.violations:
            if v.kind == "y-floor":
                floor_result.violations.append(
                    f"{label}: trial={v.trial_id} t={v.t} min_y={v.value:.3e}"
                )
    took = time.perf_counter() - t0
    rate_result.runtime_s = moment_result.runtime_s = floor_result.runtime_s = took
    return rate_result, moment_result, floor_result, summaries


def suite_hoeffding(replicates: int = 100_000, seed: int = 7) -> SuiteResult:
    t0 = time.perf_counter()
    result = SuiteResult("hoeffding-tail")
    report = hoeffding_experiment(
        count=100, alpha=0.1, prob=0.5, replicates=replicates,
        stream=RandomStream(seed, 0),
    )
    result.checked = 1
    result.stats = {
        "tail_frequency": report.tail_frequency,
        "bound": report.bound,
        "sigma": report.sigma,
    }
    if not report.ok:
        result.violations.append(
            f"tail frequency {report.tail_frequency:.4f} exceeds "
            f"{report.bound:.4f} + 3 sigma"
        )
    result.runtime_s = time.perf_counter() - t0
    return result


def suite_product_max(tuples: int = 10_000, seed: int = 8) -> SuiteResult:
    t0 = time.perf_counter()
    result = SuiteResult("product-maximization")
    rng = np.random.default_rng(seed)
    for _ in range(tuples):
        q = int(rng.integers(1, 9))
        ls = rng.integers(0, 11, size=q).tolist()
        n = int(rng.integers(2, 6))
        res = bounds.product_max_check(ls, n)
        result.checked += 1
        if not res.ok:
            result.violations.append(f"ls={ls} n={n}: lhs {res.lhs} > rhs {res.rhs}")
    result.runtime_s = time.perf_counter() - t0
    return result


def suite_census(
    trials: int = 1000, horizon: int = 10_000, threshold: float = 1e-8, seed: int = 9
) -> SuiteResult:
    """Almost-sure-convergence surrogate on the two-phase n=3 family."""
    t0 = time.perf_counter()
    result = SuiteResult("convergence-census")
    cfg = family_config(
        3, "two-phase", epsilon=0.5, trials=trials, horizon=horizon,
        seed=seed, threshold=threshold,
    )
    record = convergence_census(cfg)
    result.checked = trials
    crossings = record.first_crossings[record.first_crossings >= 0]
    result.stats = {
        "fraction": record.fraction,
        "median_first_crossing": float(np.median(crossings)) if crossings.size else -1.0,
        "max_first_crossing": int(crossings.max()) if crossings.size else -1,
    }
    if record.fraction < 1.0:
        for trial_id, seed_val in record.shortfalls:
            result.violations.append(
                f"trial {trial_id} (seed {seed_val}) never crossed {threshold}"
            )
    result.runtime_s = time.perf_counter() - t0
    return result


def suite_proof_chain() -> SuiteResult:
    t0 = time.perf_counter()
    result = SuiteResult("proof-chain")
    for n in range(2, 7):
        for B in (1, 2, 3):
            for eps in (0.3, 0.5, 1.0):
                p = eps ** (2 * (n - 1))
                t_min = B + 2 * n * B / p
                ts = np.linspace(t_min, 10 * t_min + 100, 50)
                res = bounds.proof_chain_check(n, B, eps, ts)
                result.checked += 3
                if not res.ok:
                    result.violations.append(
                        f"n={n} B={B} eps={eps}: exp={res.exp_term_ok} "
                        f"base={res.base_ok} scalar={res.scalar_ok}"
                    )
    result.runtime_s = time.perf_counter() - t0
    return result


def run_all_suites(profile: str = "quick", seed: int = 1) -> list[SuiteResult]:
    """Every inequality suite at the requested scale.

    ``acceptance`` uses the documented full scales (minutes); ``quick``
    shrinks trial counts for a fast smoke run (seconds to a minute).
    """
    if profile == "acceptance":
        scales = dict(
            matrix_trials=100, matrix_horizon=1000,
            f_trials=20, positivity_sequences=500, positivity_windows=200,
            contraction_trials=50, contraction_horizon=500,
            oracle_sequences=200, rate_trials=1000, rate_horizon=2001,
            hoeffding_replicates=100_000, product_tuples=10_000,
            census_trials=1000, census_horizon=10_000,
        )
    elif profile == "quick":
        scales = dict(
            matrix_trials=5, matrix_horizon=200,
            f_trials=5, positivity_sequences=50, positivity_windows=20,
            contraction_trials=8, contraction_horizon=120,
            oracle_sequences=20, rate_trials=50, rate_horizon=600,
            hoeffding_replicates=20_000, product_tuples=1000,
            census_trials=50, census_horizon=2000,
        )
    else:
        raise ValueError(f"unknown profile {profile!r}")

    conservation, pathwise = suite_default_matrix(
        trials=scales["matrix_trials"], horizon=scales["matrix_horizon"], seed=seed
    )
    rate_result, moment_result, floor_result, _ = suite_rate_and_moments(
        trials=scales["rate_trials"], horizon=scales["rate_horizon"], seed=seed + 5
    )
    return [
        conservation,
        pathwise,
        suite_f_metric(trials=scales["f_trials"], seed=seed + 1),
        suite_positivity(
            sequences=scales["positivity_sequences"],
            windows=scales["positivity_windows"],
            seed=seed + 2,
        ),
        suite_contraction(
            trials=scales["contraction_trials"],
            horizon=scales["contraction_horizon"],
            seed=seed + 3,
        ),
        suite_oracle_equivalence(sequences=scales["oracle_sequences"], seed=seed + 4),
        rate_result,
        moment_result,
        floor_result,
        suite_hoeffding(replicates=scales["hoeffding_replicates"], seed=seed + 6),
        suite_product_max(tuples=scales["product_tuples"], seed=seed + 7),
        suite_census(
            trials=scales["census_trials"], horizon=scales["census_horizon"],
            seed=seed + 8,
        ),
        suite_proof_chain(),
    ]
