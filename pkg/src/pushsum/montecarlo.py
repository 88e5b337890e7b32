"""Seeded multi-trial experiments: trial evolution with pathwise checks,
cross-trial aggregation, and the convergence census.

Trial ``k`` of an experiment draws from the stream ``(master seed, k)``;
aggregation reduces traces in trial order, so summaries are pure
functions of ``(seed, config)`` regardless of worker partitioning.

Natural-log errors are aggregated with exact-zero errors floored at a
configurable machine floor (default 1e-300) so that exact consensus on
symmetric instances stays finite; every substitution is counted and
reported alongside the means.
"""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds, engine
from .config import Config, validate_config
from .ergodicity import KSequenceTracker, MixingTimeline, _strongly_connected_bool
from .errors import ConfigError, DomainError
from .randgen import RandomStream
from .stochmat import COLUMN, StochasticMatrix

__all__ = [
    "Violation",
    "TrialTrace",
    "ExperimentSummary",
    "CensusRecord",
    "HoeffdingReport",
    "run_trial",
    "run_experiment",
    "convergence_census",
    "hoeffding_experiment",
]

PATHWISE_TOL = 1e-9
MASS_TOL = 1e-9
Y_FLOOR_TOL = 1e-12
F_MONOTONE_TOL = 1e-12
F_BOUND_TOL = 1e-9
PHI_TOL = 1e-12


@dataclass
class Violation:
    kind: str
    trial_id: int
    t: int
    i: int | None
    value: float
    bound: float


@dataclass
class TrialTrace:
    """Full per-step record of one trial.

    Row ``t`` holds the state after ``t`` rounds; ``lam[t]`` is the
    accumulated contraction product over renewal groups closed by time
    ``t``, so the pathwise error bound for row ``t`` pairs ``y[t]`` with
    ``lam[t-1]``.
    """

    trial_id: int
    seed: int
    B: int
    x: np.ndarray  # (horizon+1, n)
    y: np.ndarray  # (horizon+1, n)
    lam: np.ndarray  # (horizon+1,)
    timeline: MixingTimeline
    renewal_times: list[int]
    violations: list[Violation]
    f: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def horizon(self) -> int:
        return self.x.shape[0] - 1

    @property
    def xbar(self) -> float:
        return float(self.x[0].mean())

    @property
    def x0_l1(self) -> float:
        return float(np.abs(self.x[0]).sum())

    @property
    def z(self) -> np.ndarray:
        return self.x / self.y

    @property
    def err_per_node(self) -> np.ndarray:
        return np.abs(self.z - self.xbar)

    @property
    def err(self) -> np.ndarray:
        return self.err_per_node.max(axis=1)

    @property
    def min_y(self) -> np.ndarray:
        return self.y.min(axis=1)

    @property
    def truncated(self) -> bool:
        return self.timeline.truncated

    def first_crossing(self, threshold: float) -> int:
        """Earliest state time with worst-node error below the threshold; -1 if none."""
        below = np.nonzero(self.err[1:] < threshold)[0]
        return int(below[0]) + 1 if below.size else -1


def _sample_all_weights(
    config: Config, ps, trial_id: int
) -> tuple[np.ndarray, np.ndarray]:
    """All weight matrices of a trial at once (same stream order as
    stepwise draws, per the randgen draw contract)."""
    stream = RandomStream(config.seed, trial_id)
    T, n = config.horizon, config.n
    u = stream.uniform_block((T, n, n))
    p_stack = np.stack([ps.matrix_at(t) for t in range(T)])
    r = u < p_stack
    w = r.astype(float)
    w /= w.sum(axis=1, keepdims=True)
    return w, r


def run_trial(config: Config, trial_id: int) -> TrialTrace:
    """Evolve one trial and perform every pathwise check.

    Checks recorded as violations (never raised): mass conservation of
    both state sums, the pathwise error bound driven by the realized
    contraction product, the weight floor at detected renewals, and the
    optional diagnostics (f-metric monotonicity and domination, product
    contraction, renewal-oracle agreement).
    """
    report = validate_config(config)
    if not report.ok:
        raise ConfigError(
            f"schedule invalid: {[v.message for v in report.issues[:3]]}"
        )
    ps = config.sequence()
    T, n = config.horizon, config.n
    x0 = config.resolve_x0()

    w_all, r_all = _sample_all_weights(config, ps, trial_id)

    want_f = "f-metric" in config.diagnostics
    want_products = want_f or "products" in config.diagnostics
    want_oracle = "brute-cut" in config.diagnostics

    tracker = KSequenceTracker(n, mode="scc")
    oracle = KSequenceTracker(n, mode="brute-cut") if want_oracle else None

    xs = np.empty((T + 1, n))
    ys = np.empty((T + 1, n))
    state = engine.init(x0)
    xs[0], ys[0] = state.x, state.y

    f_vals = np.empty(T + 1) if want_f else None
    prod = np.eye(n) if want_products else None
    if want_f:
        f_vals[0] = engine.f_metric(prod, state.y)

    violations: list[Violation] = []
    renewal_times: list[int] = []
    # sliding window of per-block irreducibility over the last n blocks
    block_union = np.zeros((n, n), dtype=bool)
    recent_blocks: deque = deque(maxlen=n)

    for m in range(T):
        w = StochasticMatrix(w_all[m], COLUMN)
        state = engine.step(state, w)
        tau = m + 1
        xs[tau], ys[tau] = state.x, state.y

        tracker.ingest(r_all[m])
        if oracle is not None:
            oracle.ingest(r_all[m])

        block_union |= r_all[m]
        if tau % config.B == 0:
            recent_blocks.append(_strongly_connected_bool(block_union))
            block_union[:] = False
            if len(recent_blocks) == n and all(recent_blocks):
                renewal_times.append(tau)

        if want_products:
            prod = w.entries @ prod
            if want_f:
                f_vals[tau] = engine.f_metric(prod, state.y)

    timeline = tracker.timeline()
    lam = timeline.lambda_at_many(np.arange(T + 1))

    trace = TrialTrace(
        trial_id=trial_id,
        seed=config.seed,
        B=config.B,
        x=xs,
        y=ys,
        lam=lam,
        timeline=timeline,
        renewal_times=renewal_times,
        violations=violations,
        f=f_vals,
    )

    # mass conservation at every step
    dx = np.abs(xs.sum(axis=1) - xs[0].sum())
    dy = np.abs(ys.sum(axis=1) - float(n))
    for t in np.nonzero(dx > MASS_TOL)[0]:
        violations.append(Violation("mass-x", trial_id, int(t), None, float(dx[t]), MASS_TOL))
    for t in np.nonzero(dy > MASS_TOL)[0]:
        violations.append(Violation("mass-y", trial_id, int(t), None, float(dy[t]), MASS_TOL))

    # pathwise bound: err_i(t) <= 2 |x0|_1 lam(t-1) / y_i(t)
    err_i = trace.err_per_node
    bound_grid = 2.0 * trace.x0_l1 * lam[:-1, None] / ys[1:]
    bad = np.argwhere(err_i[1:] > bound_grid + PATHWISE_TOL)
    for t_idx, i in bad:
        violations.append(
            Violation(
                "pathwise-bound",
                trial_id,
                int(t_idx) + 1,
                int(i),
                float(err_i[t_idx + 1, i]),
                float(bound_grid[t_idx, i]),
            )
        )

    # weight floor right after n consecutive irreducible windows
    floor = bounds.y_floor(n, config.B)
    for t in renewal_times:
        value = float(ys[t].min())
        if value < floor - Y_FLOOR_TOL:
            violations.append(Violation("y-floor", trial_id, t, None, value, floor))

    if want_f:
        worse = np.nonzero(np.diff(f_vals) > F_MONOTONE_TOL)[0]
        for t in worse:
            violations.append(
                Violation("f-monotone", trial_id, int(t) + 1, None,
                          float(f_vals[t + 1]), float(f_vals[t]))
            )
        sup_err = np.abs(trace.z - trace.xbar).max(axis=1)
        f_bound = float(np.abs(xs[0]).max()) * f_vals
        for t in np.nonzero(sup_err > f_bound + F_BOUND_TOL)[0]:
            violations.append(
                Violation("f-bound", trial_id, int(t), None,
                          float(sup_err[t]), float(f_bound[t]))
            )

    if want_products and not want_f:
        # column-contraction of the accumulated product at the horizon
        dev = float((prod.max(axis=1) - prod.min(axis=1)).max())
        if dev > lam[T - 1] + PHI_TOL:
            violations.append(
                Violation("phi-contraction", trial_id, T, None, dev, float(lam[T - 1]))
            )

    if oracle is not None:
        otl = oracle.timeline()
        if otl.k != timeline.k:
            violations.append(Violation("oracle-mismatch", trial_id, -1, None, 0.0, 0.0))

    return trace


@dataclass
class ExperimentSummary:
    """Cross-trial aggregates, one row per state time.

    ``mean_ln_err_node[t, i]`` averages ``ln |z_i(t) - xbar|`` over trials
    (zeros floored; ``floored_node[t, i]`` counts substitutions). Rate
    comparisons pair state time ``t`` with bound argument ``t - 1``.
    """

    config: Config
    trials: int
    horizon: int
    n: int
    x0: np.ndarray
    rate: bounds.RateConstants | None
    mean_ln_err_node: np.ndarray  # (horizon+1, n)
    se_ln_err_node: np.ndarray
    mean_ln_err_max: np.ndarray  # (horizon+1,)
    se_ln_err_max: np.ndarray
    mean_lambda: np.ndarray  # (horizon+1,)
    se_lambda: np.ndarray
    mean_ln_inv_y: np.ndarray  # (horizon+1, n)
    se_ln_inv_y: np.ndarray
    floored_node: np.ndarray  # (horizon+1, n) int
    floored_max: np.ndarray  # (horizon+1,) int
    violations: list[Violation]
    truncated_trials: int
    converged_fraction: float
    first_crossings: np.ndarray  # (trials,) int, -1 when never below threshold

    def rate_comparison_rows(self) -> list[tuple[int, float, float, float]]:
        """(t, worst per-node mean ln error at state t+1, c0 - c1 t, margin)."""
        if self.rate is None:
            return []
        rows = []
        t_lo = math.ceil(self.rate.t_min)
        for t in range(t_lo, self.horizon):
            empirical = float(self.mean_ln_err_node[t + 1].max())
            bound_val = self.rate.c0 - self.rate.c1 * t
            rows.append((t, empirical, bound_val, bound_val - empirical))
        return rows

    def rate_ok(self) -> bool:
        return all(margin >= 0 for (_, _, _, margin) in self.rate_comparison_rows())


def _accumulate(summary_arrays: dict, trace: TrialTrace, ln_floor: float) -> None:
    err_i = trace.err_per_node
    ln_err_i = np.log(np.maximum(err_i, ln_floor))
    err_max = trace.err
    ln_err_max = np.log(np.maximum(err_max, ln_floor))
    ln_inv_y = -np.log(trace.y)

    summary_arrays["sum_ln_err_node"] += ln_err_i
    summary_arrays["sq_ln_err_node"] += ln_err_i**2
    summary_arrays["sum_ln_err_max"] += ln_err_max
    summary_arrays["sq_ln_err_max"] += ln_err_max**2
    summary_arrays["sum_lambda"] += trace.lam
    summary_arrays["sq_lambda"] += trace.lam**2
    summary_arrays["sum_ln_inv_y"] += ln_inv_y
    summary_arrays["sq_ln_inv_y"] += ln_inv_y**2
    summary_arrays["floored_node"] += err_i < ln_floor
    summary_arrays["floored_max"] += err_max < ln_floor


def _mean_se(total: np.ndarray, total_sq: np.ndarray, count: int):
    mean = total / count
    variance = np.maximum(total_sq / count - mean**2, 0.0)
    return mean, np.sqrt(variance / count)


def _trial_job(args) -> TrialTrace:
    config, trial_id = args
    return run_trial(config, trial_id)


def run_experiment(config: Config) -> ExperimentSummary:
    """Run all trials and aggregate; deterministic given (seed, config)."""
    report = validate_config(config)
    if not report.ok:
        raise ConfigError(
            f"schedule invalid: {[v.message for v in report.issues[:3]]}"
        )
    T, n = config.horizon, config.n
    x0 = config.resolve_x0()
    epsilon = config.sequence().epsilon
    rate = None
    if n >= 2 and float(np.abs(x0).sum()) > 0:
        rate = bounds.rate_constants(n, config.B, epsilon, float(np.abs(x0).sum()))

    arrays = {
        "sum_ln_err_node": np.zeros((T + 1, n)),
        "sq_ln_err_node": np.zeros((T + 1, n)),
        "sum_ln_err_max": np.zeros(T + 1),
        "sq_ln_err_max": np.zeros(T + 1),
        "sum_lambda": np.zeros(T + 1),
        "sq_lambda": np.zeros(T + 1),
        "sum_ln_inv_y": np.zeros((T + 1, n)),
        "sq_ln_inv_y": np.zeros((T + 1, n)),
        "floored_node": np.zeros((T + 1, n), dtype=int),
        "floored_max": np.zeros(T + 1, dtype=int),
    }
    violations: list[Violation] = []
    truncated = 0
    crossings = np.empty(config.trials, dtype=int)
    converged = 0

    jobs = [(config, tid) for tid in range(config.trials)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            traces = pool.map(_trial_job, jobs, chunksize=8)
            for trace in traces:  # submission order: reduction is trial-ordered
                _reduce_one(trace, arrays, violations, config, crossings)
                truncated += trace.truncated
                converged += crossings[trace.trial_id] >= 0
    else:
        for job in jobs:
            trace = _trial_job(job)
            _reduce_one(trace, arrays, violations, config, crossings)
            truncated += trace.truncated
            converged += crossings[trace.trial_id] >= 0

    mean_node, se_node = _mean_se(
        arrays["sum_ln_err_node"], arrays["sq_ln_err_node"], config.trials
    )
    mean_max, se_max = _mean_se(
        arrays["sum_ln_err_max"], arrays["sq_ln_err_max"], config.trials
    )
    mean_lam, se_lam = _mean_se(arrays["sum_lambda"], arrays["sq_lambda"], config.trials)
    mean_liy, se_liy = _mean_se(
        arrays["sum_ln_inv_y"], arrays["sq_ln_inv_y"], config.trials
    )

    return ExperimentSummary(
        config=config,
        trials=config.trials,
        horizon=T,
        n=n,
        x0=x0,
        rate=rate,
        mean_ln_err_node=mean_node,
        se_ln_err_node=se_node,
        mean_ln_err_max=mean_max,
        se_ln_err_max=se_max,
        mean_lambda=mean_lam,
        se_lambda=se_lam,
        mean_ln_inv_y=mean_liy,
        se_ln_inv_y=se_liy,
        floored_node=arrays["floored_node"],
        floored_max=arrays["floored_max"],
        violations=violations,
        truncated_trials=truncated,
        converged_fraction=converged / config.trials,
        first_crossings=crossings,
    )


def _reduce_one(trace, arrays, violations, config, crossings) -> None:
    _accumulate(arrays, trace, config.ln_floor)
    violations.extend(trace.violations)
    crossings[trace.trial_id] = trace.first_crossing(config.threshold)


@dataclass
class CensusRecord:
    """Convergence census across seeded trials."""

    trials: int
    horizon: int
    threshold: float
    fraction: float
    first_crossings: np.ndarray  # (trials,)
    shortfalls: list[tuple[int, int]] = field(default_factory=list)  # (trial, seed)


def convergence_census(
    config: Config, threshold: float | None = None, chunk: int = 512,
    check_schedule: bool = True,
) -> CensusRecord:
    """Fraction of trials whose worst-node error dips below the threshold.

    Runs all trials simultaneously in vectorized chunks (each trial still
    consumes its own stream exactly as ``run_trial`` would) and stops as
    soon as every trial has crossed. Trials that never cross within the
    horizon are listed with their seeds for inspection.

    ``check_schedule=False`` skips the schedule invariants, allowing
    deliberately broken schedules (which never mix) to be measured.
    """
    if threshold is None:
        threshold = config.threshold
    if threshold <= 0:
        raise DomainError(f"threshold must be positive, got {threshold}")
    if check_schedule:
        report = validate_config(config)
        if not report.ok:
            raise ConfigError(
                f"schedule invalid: {[v.message for v in report.issues[:3]]}"
            )
    ps = config.sequence()
    T, n, trials = config.horizon, config.n, config.trials
    x0 = config.resolve_x0()
    xbar = float(x0.mean())

    streams = [RandomStream(config.seed, tid) for tid in range(trials)]
    xy = np.empty((trials, n, 2))
    xy[:, :, 0] = x0
    xy[:, :, 1] = 1.0
    crossing = np.full(trials, -1, dtype=int)

    p_period = np.stack([ps.matrix_at(t) for t in range(ps.period)])
    t = 0
    while t < T and (crossing < 0).any():
        span = min(chunk, T - t)
        u = np.empty((trials, span, n, n))
        for tid, stream in enumerate(streams):
            u[tid] = stream.uniform_block((span, n, n))
        phase_idx = (np.arange(t, t + span)) % ps.period
        w = (u < p_period[phase_idx][None, :, :, :]).astype(float)
        w /= w.sum(axis=2, keepdims=True)
        for s in range(span):
            xy = np.matmul(w[:, s], xy)
            z = xy[:, :, 0] / xy[:, :, 1]
            err = np.abs(z - xbar).max(axis=1)
            hit = (err < threshold) & (crossing < 0)
            crossing[hit] = t + s + 1
            if not (crossing < 0).any():
                break
        t += span

    converged = crossing >= 0
    shortfalls = [(int(tid), config.seed) for tid in np.nonzero(~converged)[0]]
    return CensusRecord(
        trials=trials,
        horizon=T,
        threshold=threshold,
        fraction=float(converged.mean()),
        first_crossings=crossing,
        shortfalls=shortfalls,
    )


@dataclass
class HoeffdingReport:
    count: int
    alpha: float
    prob: float
    replicates: int
    tail_frequency: float
    bound: float
    sigma: float

    @property
    def ok(self) -> bool:
        return self.tail_frequency <= self.bound + 3.0 * self.sigma


def hoeffding_experiment(
    count: int, alpha: float, prob: float, replicates: int, stream: RandomStream
) -> HoeffdingReport:
    """Empirical tail frequency of a Bernoulli sum undershooting its mean
    by ``alpha * count``, compared against the concentration bound."""
    draws = stream.generator().binomial(count, prob, size=replicates)
    threshold = count * prob - alpha * count
    freq = float((draws <= threshold).mean())
    bound_val = bounds.hoeffding_bound(count, alpha)
    sigma = math.sqrt(freq * (1.0 - freq) / replicates)
    return HoeffdingReport(
        count=count,
        alpha=alpha,
        prob=prob,
        replicates=replicates,
        tail_frequency=freq,
        bound=bound_val,
        sigma=sigma,
    )
