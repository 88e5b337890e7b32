"""The push-sum protocol engine.

Each node holds a value state ``x_i`` and a weight state ``y_i`` (initially
1). Every round both are pushed through the same column-stochastic weight
matrix, ``x <- W x`` and ``y <- W y``; the ratio ``z = x / y`` is each
node's running estimate of the network average of ``x(0)``.

Column stochasticity conserves ``sum(x)`` and ``sum(y)`` exactly (up to
roundoff), which is what makes the ratio estimate unbiased in the limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DimensionError, DomainError, ProtocolError
from .stochmat import COLUMN, StochasticMatrix

__all__ = [
    "PushSumState",
    "init",
    "step",
    "estimates",
    "consensus_error",
    "mass_deviation",
    "f_metric",
    "f_error_bound",
]

_COLSUM_TOL = 1e-9


@dataclass(frozen=True)
class PushSumState:
    """State after ``t`` rounds: value vector, weight vector, retained x(0)."""

    t: int
    x: np.ndarray
    y: np.ndarray
    x0: np.ndarray

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def xbar(self) -> float:
        """Consensus target: the average of the initial values."""
        return float(self.x0.mean())


def init(x0) -> PushSumState:
    """Fresh state at ``t = 0`` with unit weights."""
    x = np.array(x0, dtype=float).reshape(-1)
    if x.size < 1:
        raise DimensionError("initial vector must have length >= 1")
    x.setflags(write=False)
    y = np.ones(x.size)
    y.setflags(write=False)
    return PushSumState(t=0, x=x, y=y, x0=x)


def step(state: PushSumState, w: StochasticMatrix) -> PushSumState:
    """Advance one round through a column-stochastic weight matrix."""
    if w.orientation != COLUMN:
        raise DomainError("push-sum requires a column-stochastic weight matrix")
    if w.n != state.n:
        raise DimensionError(f"weight matrix is {w.n}x{w.n}, state has n={state.n}")
    e = w.entries
    if float(np.abs(e.sum(axis=0) - 1.0).max()) > _COLSUM_TOL:
        raise DomainError("column sums deviate from 1 beyond 1e-9")
    if float(e.diagonal().min()) <= 0.0:
        raise ProtocolError("weight matrix must have a positive diagonal")
    x = e @ state.x
    y = e @ state.y
    x.setflags(write=False)
    y.setflags(write=False)
    return PushSumState(t=state.t + 1, x=x, y=y, x0=state.x0)


def estimates(state: PushSumState) -> np.ndarray:
    """Per-node average estimates ``z = x / y``."""
    if float(state.y.min()) <= 0.0:
        raise ConsistencyError(
            "nonpositive weight state; impossible under positive-diagonal updates"
        )
    return state.x / state.y


def consensus_error(state: PushSumState) -> float:
    """Worst-node estimate error ``max_i |z_i - xbar|``."""
    return float(np.abs(estimates(state) - state.xbar).max())


def mass_deviation(state: PushSumState) -> tuple[float, float]:
    """Absolute drift of the two conserved sums: (|sum x - sum x0|, |sum y - n|)."""
    return (
        abs(float(state.x.sum()) - float(state.x0.sum())),
        abs(float(state.y.sum()) - float(state.n)),
    )


def f_metric(wprod: StochasticMatrix | np.ndarray, y: np.ndarray) -> float:
    """Row-deviation metric of the accumulated product, normalized by ``y``.

    ``f = max_i sum_j |M[i, j] - mean_k M[i, k]| / y_i`` where ``M`` is the
    product of the weight matrices applied so far and ``y`` must equal the
    row sums ``M 1`` (which is the weight state produced by that same
    product). Non-increasing along every trajectory, and the consensus
    error obeys ``max_i |z_i - xbar| <= max|x(0)| * f``.
    """
    m = wprod.entries if isinstance(wprod, StochasticMatrix) else np.asarray(wprod, dtype=float)
    y = np.asarray(y, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or y.shape != (m.shape[0],):
        raise DimensionError(f"shape mismatch: product {m.shape}, y {y.shape}")
    if float(np.abs(m.sum(axis=1) - y).max()) > _COLSUM_TOL:
        raise ConsistencyError("y does not match the row sums of the product")
    dev = np.abs(m - m.mean(axis=1, keepdims=True)).sum(axis=1)
    return float((dev / y).max())


def f_error_bound(f_value: float, x0: np.ndarray) -> float:
    """Upper bound ``max|x(0)| * f`` on the sup-norm consensus error."""
    return float(np.abs(np.asarray(x0, dtype=float)).max()) * f_value
