"""Realized mixing structure of a matrix sequence.

Renewal times ``k_q`` mark the earliest instants by which the union graph
since the previous renewal has become strongly connected; equivalently,
every nontrivial cut has accumulated positive flow. Groups of ``n``
consecutive renewals define window lengths ``l_q = k_{qn} - k_{(q-1)n}``
and contraction factors ``lambda_q = 1 - n**(-l_q)``; the product of the
factors of all groups completed inside ``[s, t]`` bounds how far the
matrix product over that range is from rank one.

Two renewal detectors are provided: ``scc`` (incremental union graph plus
strong-connectivity test, the default) and ``brute-cut`` (per-cut flow
accumulators over all ``2**n - 2`` nontrivial cuts, exponential, used as a
cross-validation oracle).
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CapabilityError, DimensionError, DomainError, RangeError
from .stochmat import ROW, StochasticMatrix

__all__ = [
    "MixingTimeline",
    "KSequenceTracker",
    "compute_k_sequence",
    "lambda_product",
    "phi_vector",
    "phi_deviation",
    "CumulativeFlowReport",
    "infinite_flow_report",
]

_BRUTE_CUT_MAX_NODES = 20


def _strongly_connected_bool(adj: np.ndarray) -> bool:
    """Strong connectivity of a boolean adjacency via reachability closure."""
    n = adj.shape[0]
    if n == 1:
        return True
    reach = adj | np.eye(n, dtype=bool)
    span = 1
    while span < n:
        reach = reach @ reach
        span *= 2
    return bool(reach.all())


def _cut_masks(n: int) -> tuple[list[int], np.ndarray]:
    """All nontrivial cuts as bitmasks plus a (cuts, n*n) flow-selection matrix.

    Row ``c`` selects the entries ``(i in S_c, j not in S_c)`` whose sum is
    the flow across cut ``c`` (receiver-row convention).
    """
    masks = [m for m in range(1, 2**n - 1)]
    sel = np.zeros((len(masks), n * n))
    for c, m in enumerate(masks):
        inside = np.array([(m >> v) & 1 == 1 for v in range(n)])
        block = np.outer(inside, ~inside)
        sel[c] = block.reshape(-1).astype(float)
    return masks, sel


@dataclass
class MixingTimeline:
    """Renewal times and contraction factors realized along one sequence.

    ``k`` always starts with 0; ``l[g]`` and ``lam[g]`` describe the g-th
    completed group of ``n`` renewals (1-based group index ``g+1`` in the
    formulas). ``truncated`` records that the horizon cut off an unfinished
    renewal window.
    """

    n: int
    horizon: int
    k: list[int]
    truncated: bool
    l: list[int] = field(default_factory=list)
    lam: list[float] = field(default_factory=list)
    group_close: list[int] = field(default_factory=list)
    group_start: list[int] = field(default_factory=list)
    _cum: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        if not self.k or self.k[0] != 0:
            raise DomainError("renewal sequence must start at k_0 = 0")
        groups = (len(self.k) - 1) // self.n
        self.l = []
        self.lam = []
        self.group_close = []
        self.group_start = []
        self._cum = []
        running = 1.0
        for g in range(1, groups + 1):
            close = self.k[g * self.n]
            start = self.k[(g - 1) * self.n]
            length = close - start
            factor = 1.0 - float(self.n) ** (-length)
            running *= factor
            self.l.append(length)
            self.lam.append(factor)
            self.group_close.append(close)
            self.group_start.append(start)
            self._cum.append(running)

    @property
    def groups(self) -> int:
        return len(self.l)

    def lambda_at(self, t: int) -> float:
        """Accumulated contraction over groups completed by time ``t`` (from 0)."""
        idx = bisect_right(self.group_close, t)
        return self._cum[idx - 1] if idx > 0 else 1.0

    def lambda_at_many(self, ts: np.ndarray) -> np.ndarray:
        """`lambda_at` over an array of thresholds."""
        cum = np.concatenate(([1.0], np.asarray(self._cum)))
        idx = np.searchsorted(np.asarray(self.group_close), np.asarray(ts), side="right")
        return cum[idx]

    def divergence_diagnostic(self) -> tuple[float, float]:
        """Partial sum of ``n**(-l_q)`` over completed groups and its mean
        per-group increment.

        The asymptotic divergence of this series is what forces the
        contraction product to zero; a finite prefix can only be reported,
        never asserted.
        """
        if not self.l:
            return 0.0, 0.0
        terms = [float(self.n) ** (-length) for length in self.l]
        total = float(sum(terms))
        return total, total / len(terms)


def lambda_product(tl: MixingTimeline, s: int, t: int) -> float:
    """Contraction product over groups contained in ``[s, t]``.

    A group counts when its opening renewal is at or after ``s`` and its
    closing renewal is at or before ``t``; an empty index set gives 1.
    """
    if not (0 <= s <= t):
        raise RangeError(f"need t >= s >= 0, got s={s}, t={t}")
    prod = 1.0
    for g in range(len(tl.lam)):
        if tl.group_start[g] >= s and tl.group_close[g] <= t:
            prod *= tl.lam[g]
    return prod


class KSequenceTracker:
    """Incremental renewal detector fed one matrix pattern per step.

    ``scc`` mode keeps the union of edge patterns since the last renewal
    and re-tests strong connectivity only when the union gains an edge.
    ``brute-cut`` mode accumulates the flow across every nontrivial cut
    and declares a renewal when the minimum turns positive.
    """

    def __init__(self, n: int, mode: str = "scc"):
        if mode not in ("scc", "brute-cut"):
            raise DomainError(f"unknown mode {mode!r}")
        if mode == "brute-cut" and n > _BRUTE_CUT_MAX_NODES:
            raise CapabilityError(
                f"brute-cut mode enumerates 2**n - 2 cuts; capped at n <= {_BRUTE_CUT_MAX_NODES}"
            )
        self.n = n
        self.mode = mode
        self.k: list[int] = [0]
        self.steps = 0
        if mode == "scc":
            self._union = np.zeros((n, n), dtype=bool)
            self._dirty = False  # union changed since last SC test
        else:
            self._masks, self._sel = _cut_masks(n) if n > 1 else ([], np.zeros((0, n * n)))
            self._flows = np.zeros(len(self._masks))

    def ingest(self, matrix: np.ndarray) -> bool:
        """Feed the matrix for time ``self.steps``; True if a renewal closed."""
        m = np.asarray(matrix)
        time_index = self.steps
        self.steps += 1
        renewed = False
        if self.mode == "scc":
            pattern = m > 0
            grew = bool(np.any(pattern & ~self._union))
            if grew:
                self._union |= pattern
                self._dirty = True
            if self.n == 1:
                renewed = True
            elif self._dirty:
                if _strongly_connected_bool(self._union):
                    renewed = True
                else:
                    self._dirty = False  # no point retesting until an edge arrives
        else:
            if self.n == 1:
                renewed = True
            else:
                self._flows += self._sel @ np.asarray(m, dtype=float).reshape(-1)
                renewed = bool(self._flows.min() > 0.0)
        if renewed:
            self.k.append(time_index + 1)
            if self.mode == "scc":
                self._union[:] = False
                self._dirty = False
            elif self.n > 1:
                self._flows[:] = 0.0
        return renewed

    def timeline(self) -> MixingTimeline:
        return MixingTimeline(
            n=self.n,
            horizon=self.steps,
            k=list(self.k),
            truncated=self.k[-1] < self.steps,
        )


def compute_k_sequence(
    seq: Sequence[StochasticMatrix | np.ndarray], mode: str = "scc"
) -> MixingTimeline:
    """Renewal timeline of a full matrix sequence ``W(0..T-1)``."""
    if not seq:
        raise DimensionError("need at least one matrix")
    first = seq[0]
    n = first.n if isinstance(first, StochasticMatrix) else np.asarray(first).shape[0]
    tracker = KSequenceTracker(n, mode=mode)
    for m in seq:
        e = m.entries if isinstance(m, StochasticMatrix) else np.asarray(m, dtype=float)
        if e.shape != (n, n):
            raise DimensionError(f"matrix shape {e.shape} does not match n={n}")
        tracker.ingest(e)
    return tracker.timeline()


def phi_vector(wprod: StochasticMatrix | np.ndarray, orientation: str = ROW) -> np.ndarray:
    """Limit-candidate vector of a windowed product.

    Row-stochastic products approach a matrix with identical rows; the
    candidate is the columnwise minimum (``phi[j] = min_i M[i, j]``).
    Column-stochastic products approach identical columns; the candidate
    is the rowwise minimum (``phi[i] = min_j M[i, j]``).
    """
    m = wprod.entries if isinstance(wprod, StochasticMatrix) else np.asarray(wprod, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return m.min(axis=0) if orientation == ROW else m.min(axis=1)


def phi_deviation(wprod: StochasticMatrix | np.ndarray, orientation: str = ROW) -> float:
    """Worst entrywise distance from the phi vector; bounded by the
    accumulated contraction factor of the window."""
    m = wprod.entries if isinstance(wprod, StochasticMatrix) else np.asarray(wprod, dtype=float)
    if orientation == ROW:
        return float((m.max(axis=0) - m.min(axis=0)).max())
    return float((m.max(axis=1) - m.min(axis=1)).max())


@dataclass
class CumulativeFlowReport:
    """Finite-horizon cut-flow diagnostic.

    The underlying property (every cut accumulates unbounded flow) is
    asymptotic and cannot be decided from a prefix; this reports the
    realized totals and the linear growth rate of the worst cut.
    """

    horizon: int
    n: int
    totals: dict[tuple[int, ...], float]
    min_total: float
    min_cut: tuple[int, ...]
    slope: float


def infinite_flow_report(
    seq: Sequence[StochasticMatrix | np.ndarray],
) -> CumulativeFlowReport:
    """Accumulate the flow across every nontrivial cut of a sequence prefix."""
    if not seq:
        raise DimensionError("need at least one matrix")
    first = seq[0]
    n = first.n if isinstance(first, StochasticMatrix) else np.asarray(first).shape[0]
    if n > _BRUTE_CUT_MAX_NODES:
        raise CapabilityError(
            f"per-cut accumulators enumerate 2**n - 2 cuts; capped at n <= {_BRUTE_CUT_MAX_NODES}"
        )
    if n == 1:
        return CumulativeFlowReport(
            horizon=len(seq), n=1, totals={}, min_total=0.0, min_cut=(), slope=0.0
        )
    masks, sel = _cut_masks(n)
    flows = np.zeros(len(masks))
    running_min = np.empty(len(seq))
    for t, m in enumerate(seq):
        e = m.entries if isinstance(m, StochasticMatrix) else np.asarray(m, dtype=float)
        flows += sel @ e.reshape(-1)
        running_min[t] = flows.min()
    label = lambda mask: tuple(v for v in range(n) if (mask >> v) & 1)
    totals = {label(mask): float(flows[c]) for c, mask in enumerate(masks)}
    worst = int(flows.argmin())
    times = np.arange(1, len(seq) + 1, dtype=float)
    slope = float(np.polyfit(times, running_min, 1)[0]) if len(seq) > 1 else 0.0
    return CumulativeFlowReport(
        horizon=len(seq),
        n=n,
        totals=totals,
        min_total=float(flows[worst]),
        min_cut=label(masks[worst]),
        slope=slope,
    )
