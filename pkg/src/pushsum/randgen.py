"""Probability-matrix schedules and Bernoulli sampling of weight matrices.

A schedule assigns to each time ``t`` an ``n x n`` matrix ``P(t)`` of link
probabilities, receiver-row convention: ``P[i, j]`` is the probability that
``j`` transmits to ``i`` at time ``t``. Diagonals are 1 (nodes always keep a
share for themselves), every positive entry is at least ``epsilon``, and the
window sums ``P(tB) + ... + P((t+1)B - 1)`` must be irreducible.

All built-in schedules are periodic pure functions of ``t``, so validating
one full period-window cycle certifies every time.

Sampling draw contract (reproducibility)
----------------------------------------
A stream draws one row-major ``n x n`` uniform block per time step and sets
``R[i, j] = 1`` iff ``u[i, j] < P(t)[i, j]``; the weight matrix is ``R``
normalized by its column sums. Drawing a ``(T, n, n)`` block up front
consumes the stream identically to ``T`` sequential per-step draws, so
batched and stepwise simulations of the same trial coincide bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .digraph import from_positive_pattern, is_strongly_connected
from .errors import ConfigError, DimensionError, DomainError
from .stochmat import COLUMN, StochasticMatrix

__all__ = [
    "ProbabilitySequence",
    "RandomStream",
    "ValidationIssue",
    "ValidationReport",
    "FrequencyReport",
    "validate",
    "sample_weight_matrix",
    "sample_weight_array",
    "edge_probability_check",
    "bernoulli_family",
    "directed_cycle_family",
    "two_phase_cycle_family",
    "load_schedule_file",
]

STATIC = "static"
PERIODIC = "periodic"
SCHEDULE = "schedule"


def _as_probability_matrix(p: np.ndarray, n: int) -> np.ndarray:
    m = np.array(p, dtype=float)
    if m.shape != (n, n):
        raise DimensionError(f"phase matrix has shape {m.shape}, expected {(n, n)}")
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class ProbabilitySequence:
    """Periodic schedule of link-probability matrices.

    ``epsilon`` defaults to the smallest positive entry across phases,
    the tightest lower bound the schedule supports.
    """

    n: int
    B: int
    epsilon: float
    family: str
    phases: tuple[np.ndarray, ...]

    @property
    def period(self) -> int:
        return len(self.phases)

    def matrix_at(self, t: int) -> np.ndarray:
        return self.phases[t % self.period]

    @staticmethod
    def static(p: np.ndarray, B: int = 1, epsilon: float | None = None) -> "ProbabilitySequence":
        return ProbabilitySequence._build(STATIC, (p,), B, epsilon)

    @staticmethod
    def periodic(
        phases: Sequence[np.ndarray], B: int | None = None, epsilon: float | None = None
    ) -> "ProbabilitySequence":
        if not phases:
            raise DimensionError("periodic schedule needs at least one phase")
        if B is None:
            B = len(phases)
        return ProbabilitySequence._build(PERIODIC, tuple(phases), B, epsilon)

    @staticmethod
    def _build(
        family: str,
        phases: tuple[np.ndarray, ...],
        B: int,
        epsilon: float | None,
    ) -> "ProbabilitySequence":
        n = np.asarray(phases[0]).shape[0]
        mats = tuple(_as_probability_matrix(p, n) for p in phases)
        if B < 1:
            raise DomainError(f"window length B must be >= 1, got {B}")
        if epsilon is None:
            positives = [m[m > 0] for m in mats if np.any(m > 0)]
            epsilon = float(min(p.min() for p in positives)) if positives else 1.0
        if not (0 < epsilon <= 1):
            raise DomainError(f"epsilon must lie in (0, 1], got {epsilon}")
        return ProbabilitySequence(n=n, B=B, epsilon=epsilon, family=family, phases=mats)


@dataclass
class RandomStream:
    """Sequential uniform stream for one trial.

    Streams with distinct ``(seed, stream_id)`` are statistically
    independent (numpy ``SeedSequence`` spawn keys); the same pair always
    reproduces the same draws.
    """

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator | None = field(default=None, repr=False, compare=False)

    def generator(self) -> np.random.Generator:
        if self._gen is None:
            ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
            self._gen = np.random.default_rng(ss)
        return self._gen

    def uniform_block(self, shape: tuple[int, ...]) -> np.ndarray:
        return self.generator().random(shape)


@dataclass
class ValidationIssue:
    kind: str
    t: int
    i: int
    j: int
    message: str


@dataclass
class ValidationReport:
    horizon: int
    issues: list[ValidationIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues


def _window_cover(ps: ProbabilitySequence, horizon: int) -> int:
    """Number of windows whose phase composition covers all alignments."""
    cycle = math.lcm(ps.period, ps.B) // ps.B
    return max(1, cycle)


def validate(ps: ProbabilitySequence, horizon: int) -> ValidationReport:
    """Check the schedule invariants; violations are reported, never raised.

    Entry checks run once per phase (the earliest time with that phase is
    reported); window irreducibility is checked on every distinct phase
    alignment, which certifies all ``t`` for periodic schedules.
    """
    report = ValidationReport(horizon=horizon)
    for phase_idx, p in enumerate(ps.phases):
        for i in range(ps.n):
            if p[i, i] != 1.0:
                report.issues.append(
                    ValidationIssue(
                        "diagonal-not-one", phase_idx, i, i,
                        f"P[{i},{i}] = {p[i, i]} at t={phase_idx} (must be 1)",
                    )
                )
        bad = np.argwhere((p < 0) | (p > 1))
        for i, j in bad:
            report.issues.append(
                ValidationIssue(
                    "entry-out-of-range", phase_idx, int(i), int(j),
                    f"P[{i},{j}] = {p[i, j]} outside [0, 1]",
                )
            )
        low = np.argwhere((p > 0) & (p < ps.epsilon))
        for i, j in low:
            if i != j:
                report.issues.append(
                    ValidationIssue(
                        "entry-below-epsilon", phase_idx, int(i), int(j),
                        f"P[{i},{j}] = {p[i, j]} positive but below epsilon={ps.epsilon}",
                    )
                )

    for w in range(_window_cover(ps, horizon)):
        total = np.zeros((ps.n, ps.n))
        for t in range(w * ps.B, (w + 1) * ps.B):
            total = total + ps.matrix_at(t)
        g = from_positive_pattern(total)
        if not is_strongly_connected(g):
            report.issues.append(
                ValidationIssue(
                    "window-sum-reducible", w, -1, -1,
                    f"window sum over [{w * ps.B}, {(w + 1) * ps.B}) is reducible",
                )
            )
    return report


def sample_weight_array(ps: ProbabilitySequence, t: int, stream: RandomStream) -> np.ndarray:
    """One weight matrix as a raw array (fast path; see the draw contract)."""
    u = stream.uniform_block((ps.n, ps.n))
    r = (u < ps.matrix_at(t)).astype(float)
    return r / r.sum(axis=0)


def sample_weight_matrix(
    ps: ProbabilitySequence, t: int, stream: RandomStream
) -> StochasticMatrix:
    """Draw ``R[i, j] ~ Bernoulli(P(t)[i, j])`` and column-normalize.

    ``R`` has a unit diagonal almost surely, so columns are never empty;
    positive entries of the result are at least ``1/n``.
    """
    return StochasticMatrix(sample_weight_array(ps, t, stream), COLUMN)


@dataclass
class FrequencyReport:
    window: int
    trials: int
    frequency: float
    lower_bound: float
    sigma: float

    @property
    def ok(self) -> bool:
        return self.frequency >= self.lower_bound - 3.0 * self.sigma


def edge_probability_check(
    ps: ProbabilitySequence, window: int, stream: RandomStream, trials: int
) -> FrequencyReport:
    """Monte Carlo frequency of an irreducible sampled window sum.

    The event is that ``W(tB) + ... + W((t+1)B - 1)`` is irreducible; its
    probability is at least ``epsilon**(2(n-1))`` because some strongly
    connected spanning subgraph with at most ``2(n-1)`` edges is drawn
    whenever each of those links fires.
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    hits = 0
    for _ in range(trials):
        total = np.zeros((ps.n, ps.n))
        for t in range(window * ps.B, (window + 1) * ps.B):
            total = total + sample_weight_array(ps, t, stream)
        if is_strongly_connected(from_positive_pattern(total)):
            hits += 1
    freq = hits / trials
    bound = ps.epsilon ** (2 * (ps.n - 1))
    sigma = math.sqrt(freq * (1.0 - freq) / trials)
    return FrequencyReport(
        window=window, trials=trials, frequency=freq, lower_bound=bound, sigma=sigma
    )


# ---------------------------------------------------------------------------
# Built-in families
# ---------------------------------------------------------------------------

def bernoulli_family(n: int, epsilon: float) -> ProbabilitySequence:
    """Static schedule: every cross link fires independently with ``epsilon``."""
    p = np.full((n, n), epsilon)
    np.fill_diagonal(p, 1.0)
    return ProbabilitySequence.static(p, B=1, epsilon=epsilon)


def directed_cycle_family(n: int, epsilon: float) -> ProbabilitySequence:
    """Static schedule whose positive pattern is the directed n-cycle."""
    p = np.eye(n)
    for v in range(n):
        p[(v + 1) % n, v] = epsilon
    return ProbabilitySequence.static(p, B=1, epsilon=epsilon)


def two_phase_cycle_family(n: int, epsilon: float) -> ProbabilitySequence:
    """Two-phase schedule with B=2: the cycle is split across the phases.

    Phase 0 carries the forward chain ``v -> v+1``; phase 1 carries the
    closing link ``n-1 -> 0``. Neither phase is irreducible alone, but
    every window of two consecutive phases is.
    """
    phase0 = np.eye(n)
    for v in range(n - 1):
        phase0[v + 1, v] = epsilon
    phase1 = np.eye(n)
    phase1[0, n - 1] = epsilon
    return ProbabilitySequence.periodic((phase0, phase1), B=2, epsilon=epsilon)


# ---------------------------------------------------------------------------
# Schedule files
# ---------------------------------------------------------------------------

def load_schedule_file(path: str | Path) -> ProbabilitySequence:
    """Load a periodic schedule from a text file.

    Grammar (blank lines and ``#`` comments ignored):

        n B epsilon period      <- single header line
        <n rows of n decimals>  <- phase 0, row-major
        ...                     <- phases 1 .. period-1

    """
    path = Path(path)
    tokens: list[tuple[int, str]] = []
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                tokens.append((lineno, line))
    if not tokens:
        raise ConfigError(f"{path}: empty schedule file")

    header_line, header = tokens[0]
    parts = header.split()
    if len(parts) != 4:
        raise ConfigError(
            f"{path}:{header_line}: header must be 'n B epsilon period', got {header!r}"
        )
    try:
        n, b = int(parts[0]), int(parts[1])
        epsilon = float(parts[2])
        period = int(parts[3])
    except ValueError as exc:
        raise ConfigError(f"{path}:{header_line}: bad header value: {exc}") from exc
    if n < 1 or b < 1 or period < 1:
        raise ConfigError(f"{path}:{header_line}: n, B, period must be positive")

    rows_needed = n * period
    body = tokens[1:]
    if len(body) != rows_needed:
        raise ConfigError(
            f"{path}: expected {rows_needed} matrix rows ({period} phases of {n}), "
            f"found {len(body)}"
        )
    phases = []
    cursor = 0
    for _phase in range(period):
        rows = []
        for _ in range(n):
            lineno, line = body[cursor]
            cursor += 1
            vals = line.split()
            if len(vals) != n:
                raise ConfigError(
                    f"{path}:{lineno}: expected {n} values in matrix row, got {len(vals)}"
                )
            try:
                rows.append([float(v) for v in vals])
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad decimal: {exc}") from exc
        phases.append(np.array(rows))
    seq = ProbabilitySequence._build(SCHEDULE, tuple(phases), b, epsilon)
    return seq
