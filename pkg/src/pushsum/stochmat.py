"""Stochastic matrices, the out-degree weight construction, ordered
products, cut flows, and entrywise lower-bound checks.

Everything is double precision. Positive entries of out-degree weights
are at least ``1/n``, so products over a window of length ``h`` have
positive entries at least ``n**-h``; structural (positivity) checks cap
``h`` so this stays above the double-precision underflow threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .digraph import DirectedGraph, out_degrees
from .errors import (
    CapabilityError,
    DimensionError,
    DomainError,
    ProtocolError,
    RangeError,
)

__all__ = [
    "ROW",
    "COLUMN",
    "STOCHASTIC_TOL",
    "StochasticMatrix",
    "BoundReport",
    "weight_from_graph",
    "product_range",
    "cut_flow",
    "check_entry_bounds",
    "max_min_column_gap",
    "is_positive",
]

ROW = "row"
COLUMN = "column"

# Sum tolerance for stochasticity; holds for iterated products up to
# horizon 1e4 at desk-scale n (drift observed ~1e-13).
STOCHASTIC_TOL = 1e-12

_MIN_NORMAL = 2.2250738585072014e-308


@dataclass(frozen=True)
class StochasticMatrix:
    """Nonnegative square matrix tagged row- or column-stochastic.

    Entries are validated and frozen at construction; the wrapped array
    is marked read-only so instances can be shared across trial workers.
    """

    entries: np.ndarray
    orientation: str = COLUMN

    def __post_init__(self) -> None:
        m = np.array(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {m.shape}")
        if self.orientation not in (ROW, COLUMN):
            raise DomainError(f"unknown orientation {self.orientation!r}")
        if not np.all(m >= 0):
            raise DomainError("stochastic matrix entries must be nonnegative")
        axis = 1 if self.orientation == ROW else 0
        sums = m.sum(axis=axis)
        worst = float(np.abs(sums - 1.0).max())
        if worst > STOCHASTIC_TOL:
            raise DomainError(
                f"{self.orientation}-stochastic sums off by {worst:.3e} "
                f"(tolerance {STOCHASTIC_TOL:.0e})"
            )
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def transpose(self) -> "StochasticMatrix":
        other = ROW if self.orientation == COLUMN else COLUMN
        return StochasticMatrix(self.entries.T.copy(), other)


def weight_from_graph(g: DirectedGraph) -> StochasticMatrix:
    """Column-stochastic weight matrix of a communication graph.

    ``W[i, j] = 1 / d_out(j)`` when ``(j, i)`` is an edge, else 0: each
    sender splits its mass uniformly over its out-neighbors (itself
    included). Requires all self-loops, so the diagonal is positive.
    """
    if not g.has_all_self_loops:
        missing = [v for v in range(g.n) if (v, v) not in g.edges]
        raise ProtocolError(f"graph lacks self-loops at nodes {missing}")
    deg = out_degrees(g)
    w = np.zeros((g.n, g.n))
    for (src, dst) in g.edges:
        w[dst, src] = 1.0 / deg[src]
    return StochasticMatrix(w, COLUMN)


def product_range(
    seq: Sequence[StochasticMatrix], s: int, t: int
) -> StochasticMatrix:
    """Ordered product ``A(t:s) = A(t) A(t-1) ... A(s)``, with ``A(s:s) = A(s)``.

    Computed by iterative left-multiplication; orientation is preserved.
    """
    if not (0 <= s <= t):
        raise RangeError(f"need t >= s >= 0, got s={s}, t={t}")
    if t >= len(seq):
        raise RangeError(f"t={t} beyond sequence of length {len(seq)}")
    orientation = seq[s].orientation
    n = seq[s].n
    acc = seq[s].entries.copy()
    for r in range(s + 1, t + 1):
        a = seq[r]
        if a.n != n or a.orientation != orientation:
            raise DimensionError("mixed dimensions or orientations in product")
        acc = a.entries @ acc
    return StochasticMatrix(acc, orientation)


def cut_flow(m: StochasticMatrix, subset: Iterable[int]) -> float:
    """Total flow ``sum_{i in S, j not in S} M[i, j]`` across a nontrivial cut."""
    s = sorted(set(subset))
    if not s or len(s) >= m.n:
        raise DomainError(f"subset must be nontrivial, got {s} with n={m.n}")
    if s[0] < 0 or s[-1] >= m.n:
        raise DomainError(f"subset {s} out of range for n={m.n}")
    comp = [j for j in range(m.n) if j not in set(s)]
    return float(m.entries[np.ix_(s, comp)].sum())


def max_min_column_gap(m: StochasticMatrix | np.ndarray) -> np.ndarray:
    """Per-column spread ``max_i M[i, j] - min_i M[i, j]``.

    All-zero exactly when the rows are identical; for products of
    row-stochastic sequences it is dominated by the accumulated
    contraction factor.
    """
    e = m.entries if isinstance(m, StochasticMatrix) else np.asarray(m, dtype=float)
    return e.max(axis=0) - e.min(axis=0)


def is_positive(m: StochasticMatrix | np.ndarray, tol: float = 0.0) -> bool:
    """True iff every entry exceeds ``tol``."""
    e = m.entries if isinstance(m, StochasticMatrix) else np.asarray(m, dtype=float)
    return bool(np.all(e > tol))


@dataclass
class BoundReport:
    """Outcome of the entrywise lower-bound check on a windowed product."""

    s: int
    t: int
    gamma: float
    threshold: float
    violations: list[tuple[str, int, int, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_entry_bounds(
    seq: Sequence[StochasticMatrix], s: int, t: int, gamma: float
) -> BoundReport:
    """Verify entrywise lower bounds of ``A(t:s)`` against ``gamma**(t-s+1)``.

    Three clauses, all requiring every positive entry of every factor to
    be at least ``gamma`` and all diagonals positive:

    (i)   diagonal entries of the product;
    (ii)  entries ``(i, j)`` positive in some factor of the window;
    (iii) two-hop entries: ``j`` reaches ``k`` in the first factor and
          ``k`` reaches ``i`` in a later one.

    Violations are collected in the report (none are expected).
    """
    if gamma <= 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    if not (0 <= s <= t):
        raise RangeError(f"need t >= s >= 0, got s={s}, t={t}")
    length = t - s + 1
    if gamma < 1.0 and length * math.log(gamma) < math.log(_MIN_NORMAL):
        raise CapabilityError(
            f"gamma**{length} underflows double precision; shorten the window"
        )
    for r in range(s, t + 1):
        e = seq[r].entries
        pos = e[e > 0]
        if pos.size and float(pos.min()) < gamma:
            raise DomainError(
                f"factor at time {r} has a positive entry below gamma={gamma}"
            )
        if float(e.diagonal().min()) <= 0:
            raise DomainError(f"factor at time {r} lacks a positive diagonal")

    prod = product_range(seq, s, t).entries
    threshold = gamma**length
    report = BoundReport(s=s, t=t, gamma=gamma, threshold=threshold)

    n = prod.shape[0]
    diag = prod.diagonal()
    for i in range(n):
        if diag[i] < threshold:
            report.violations.append(("diagonal", i, i, float(diag[i])))

    seen_positive = np.zeros((n, n), dtype=bool)
    for r in range(s, t + 1):
        seen_positive |= seq[r].entries > 0
    for i, j in zip(*np.nonzero(seen_positive)):
        if prod[i, j] < threshold:
            report.violations.append(("single-hop", int(i), int(j), float(prod[i, j])))

    # earliest factor carries j -> k, any strictly later factor carries k -> i
    first_hop = seq[s].entries > 0  # [k, j]
    later = np.zeros((n, n), dtype=bool)  # [i, k]
    for r in range(s + 1, t + 1):
        later |= seq[r].entries > 0
    two_hop = later @ first_hop  # [i, j]: exists k
    for i, j in zip(*np.nonzero(two_hop)):
        if prod[i, j] < threshold:
            report.violations.append(("two-hop", int(i), int(j), float(prod[i, j])))

    return report
