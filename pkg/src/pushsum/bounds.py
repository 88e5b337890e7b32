"""Closed-form bounds and constants for the consensus rate analysis.

Everything here is a pure function of the problem parameters: the
per-window irreducibility floor ``p = epsilon**(2(n-1))``, the affine
log-error rate ``c0 - c1 t``, the expected-contraction bound, the
expected log-inverse-weight bound, the weight floor at renewals, the
concentration tail bound, and the product-maximization inequality used
to dominate realized contraction products.

Bounds exceeding 1 in the early, vacuous regime are returned as-is; the
verification suites check inequality, not usefulness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import DomainError

__all__ = [
    "RateConstants",
    "rate_constants",
    "pathwise_bound",
    "expected_lambda_bound",
    "expected_log_inv_y_bound",
    "y_floor",
    "hoeffding_bound",
    "ProductMaxResult",
    "product_max_check",
    "ProofChainResult",
    "proof_chain_check",
]


def _base_power(n: int, B: int, p: float) -> float:
    """``n**(-4nB/p)``; underflows to 0.0 for extreme parameters."""
    return math.exp(-(4.0 * n * B / p) * math.log(n))


@dataclass(frozen=True)
class RateConstants:
    """Constants of the affine bound ``E[ln|z_i(t+1) - xbar|] <= c0 - c1 t``.

    Valid for ``t >= t_min``. ``c1`` is positive for ``n >= 2`` but can
    underflow to exactly 0.0 when ``n**(-4nB/p)`` drops below the smallest
    double (the bound degenerates to the constant ``c0``, still valid).
    """

    n: int
    B: int
    epsilon: float
    x0_l1norm: float
    p: float
    c0: float
    c1: float
    t_min: float


def rate_constants(n: int, B: int, epsilon: float, x0_l1norm: float) -> RateConstants:
    """Rate constants from the problem parameters.

    ``p = epsilon**(2(n-1))``,
    ``c0 = ln(2 |x0|_1) + ln(n) (nB/p + B) + ln 15``,
    ``c1 = -(p / 2nB) ln(1 - n**(-4nB/p))``,
    ``t_min = B + 2nB/p``.
    """
    if n < 2:
        raise DomainError(f"rate constants are defined for n >= 2, got n={n}")
    if B < 1:
        raise DomainError(f"B must be >= 1, got {B}")
    if not (0 < epsilon <= 1):
        raise DomainError(f"epsilon must lie in (0, 1], got {epsilon}")
    if x0_l1norm <= 0:
        raise DomainError(f"|x0|_1 must be positive, got {x0_l1norm}")
    p = epsilon ** (2 * (n - 1))
    c0 = math.log(2.0 * x0_l1norm) + math.log(n) * (n * B / p + B) + math.log(15.0)
    c1 = -(p / (2.0 * n * B)) * math.log1p(-_base_power(n, B, p))
    t_min = B + 2.0 * n * B / p
    return RateConstants(
        n=n, B=B, epsilon=epsilon, x0_l1norm=x0_l1norm, p=p, c0=c0, c1=c1, t_min=t_min
    )


def pathwise_bound(x0_l1norm: float, y_i: float, lambda_t0: float) -> float:
    """Pathwise error bound ``2 |x0|_1 lambda / y_i`` for one node."""
    if y_i <= 0:
        raise DomainError(f"weight state must be positive, got {y_i}")
    return 2.0 * x0_l1norm * lambda_t0 / y_i


def expected_lambda_bound(t: float, n: int, B: int, p: float) -> float:
    """Two-term bound on the expected contraction product at time ``t``.

    ``exp(-beta_t**2 (t/B - 2)) + 2 (1 - n**(-4nB/p))**(pt/2nB)`` with
    ``beta_t = p/2 - 2pB/t``; valid for ``t >= B + 2nB/p``.
    """
    t_min = B + 2.0 * n * B / p
    if t < t_min:
        raise DomainError(f"bound valid for t >= {t_min}, got t={t}")
    beta = p / 2.0 - 2.0 * p * B / t
    first = math.exp(-(beta**2) * (t / B - 2.0))
    second = 2.0 * (1.0 - _base_power(n, B, p)) ** (p * t / (2.0 * n * B))
    return first + second


def expected_log_inv_y_bound(n: int, B: int, p: float) -> float:
    """Time-uniform bound ``ln(n) (nB/p + B)`` on ``E[ln(1/y_i)]``."""
    return math.log(n) * (n * B / p + B)


def y_floor(n: int, B: int) -> float:
    """Weight floor ``n**(-nB)`` guaranteed right after a full renewal window."""
    return float(n) ** (-(n * B))


def hoeffding_bound(count: int, alpha: float) -> float:
    """Concentration tail bound ``exp(-2 alpha**2 count)`` for sums of
    independent [0, 1] variables falling ``alpha * count`` below their mean."""
    return math.exp(-2.0 * alpha**2 * count)


@dataclass(frozen=True)
class ProductMaxResult:
    lhs: float
    rhs: float
    ok: bool


def product_max_check(ls: Sequence[int], n: int) -> ProductMaxResult:
    """Compare ``prod(1 - n**(-l_i))`` against ``(1 - n**(-t/q))**q``.

    Equal window lengths maximize the product at fixed total length ``t``
    (concavity of ``ln(1 - n**-x)``), so lhs <= rhs always.
    """
    if not ls:
        raise DomainError("need at least one window length")
    if n < 2:
        raise DomainError(f"base must be >= 2, got n={n}")
    q = len(ls)
    total = float(sum(ls))
    lhs = 1.0
    for l in ls:
        lhs *= 1.0 - float(n) ** (-float(l))
    rhs = (1.0 - float(n) ** (-total / q)) ** q
    return ProductMaxResult(lhs=lhs, rhs=rhs, ok=lhs <= rhs + 1e-12)


@dataclass
class ProofChainResult:
    """Numeric check of the simplification chain behind the rate constants."""

    n: int
    B: int
    epsilon: float
    p: float
    exp_term_ok: bool
    base_ok: bool
    scalar_ok: bool
    worst_margin: float

    @property
    def ok(self) -> bool:
        return self.exp_term_ok and self.base_ok and self.scalar_ok


def proof_chain_check(
    n: int, B: int, epsilon: float, t_values: Sequence[float]
) -> ProofChainResult:
    """Check the chained inequalities used to collapse the two-term bound:

    (a) ``exp(-beta_t**2 (t/B - 2)) <= 13 exp(-p**2 t / 4B)`` on the grid,
    (b) ``exp(-pn/2) <= 1 - n**(-4nB/p)``,
    (c) ``exp(-p) <= 1 - 2**(-8/p)``.
    """
    p = epsilon ** (2 * (n - 1))
    t_min = B + 2.0 * n * B / p
    worst = math.inf
    exp_ok = True
    for t in t_values:
        if t < t_min:
            continue
        beta = p / 2.0 - 2.0 * p * B / t
        lhs = math.exp(-(beta**2) * (t / B - 2.0))
        rhs = 13.0 * math.exp(-(p**2) * t / (4.0 * B))
        worst = min(worst, rhs - lhs)
        if lhs > rhs:
            exp_ok = False
    base_lhs = math.exp(-p * n / 2.0)
    base_rhs = 1.0 - _base_power(n, B, p)
    scalar_lhs = math.exp(-p)
    scalar_rhs = 1.0 - 2.0 ** (-8.0 / p)
    return ProofChainResult(
        n=n,
        B=B,
        epsilon=epsilon,
        p=p,
        exp_term_ok=exp_ok,
        base_ok=base_lhs <= base_rhs,
        scalar_ok=scalar_lhs <= scalar_rhs,
        worst_margin=worst,
    )
