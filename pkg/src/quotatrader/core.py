"""Core preference model for mobile-data quota trading.

A mobile-data plan gives the user a monthly quota; usage beyond the
quota is billed at a steep per-GB overage rate.  A secondary market lets
the user buy extra quota (at the lowest asking price) or sell surplus
quota (at the highest bid) before the month ends.  Whether a trade looks
attractive depends not only on the demand outlook but on how the user
feels about gains and losses, which this module captures with a
prospect-theory preference model:

* an S-shaped value function with diminishing sensitivity (curvature
  ``beta``) and loss aversion (``lam``),
* Prelec probability weighting (distortion ``mu``) that overweights
  small probabilities, and
* a reference point against which monetary outcomes are framed: either
  the status quo of paying no overage (a "high" expectation) or the
  worst-case overage bill (a "low" expectation).

Setting ``beta = lam = mu = 1`` recovers a risk-neutral expected-utility
user, so every routine here serves both the behavioural and the
classical analysis.

Conventions: money is HKD, data is GB.  Buying quantities are
non-negative; selling quantities are non-negative and capped elsewhere
by the quota actually held.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_KAPPA",
    "ReferencePolicy",
    "RiskProfile",
    "DemandDistribution",
    "UserState",
    "MarketQuote",
    "value",
    "weight",
    "satisfaction_loss",
    "reference_point",
    "buyer_objective",
    "seller_objective",
    "buyer_objective_derivative",
    "seller_objective_derivative",
]

#: Per-GB overage charge (HKD) of the 4G plan used throughout the
#: examples; individual states may override it.
DEFAULT_KAPPA = 60.0

_EUT_EPS = 1e-9


class ReferencePolicy(enum.Enum):
    """How monetary outcomes are framed before valuation.

    ``HIGH`` frames outcomes against the best case (no overage bill), so
    every payment registers as a loss.  ``LOW`` frames them against the
    worst case (overage on the highest demand outcome), so avoided
    charges register as gains.
    """

    HIGH = "high"
    LOW = "low"


@dataclass(frozen=True)
class RiskProfile:
    """Prospect-theory risk parameters of a single user.

    Parameters
    ----------
    beta:
        Curvature of the value function, ``0 < beta <= 1``.  Smaller
        values mean stronger diminishing sensitivity (risk aversion in
        gains, risk seeking in losses).
    lam:
        Loss-aversion multiplier, ``lam >= 1``.  Losses loom ``lam``
        times larger than equal-sized gains.
    mu:
        Prelec probability-distortion parameter, ``0 < mu <= 1``.
        ``mu = 1`` leaves probabilities undistorted.
    reference:
        Default framing used when an operation is not given an explicit
        reference policy.
    """

    beta: float = 1.0
    lam: float = 1.0
    mu: float = 1.0
    reference: ReferencePolicy = ReferencePolicy.HIGH

    def __post_init__(self) -> None:
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if self.lam < 1.0:
            raise ValueError(f"lam must be >= 1, got {self.lam}")
        if not 0.0 < self.mu <= 1.0:
            raise ValueError(f"mu must lie in (0, 1], got {self.mu}")

    @classmethod
    def expected_utility(
        cls, reference: ReferencePolicy = ReferencePolicy.HIGH
    ) -> "RiskProfile":
        """The risk-neutral profile (beta = lam = mu = 1)."""
        return cls(1.0, 1.0, 1.0, reference)

    @property
    def is_expected_utility(self) -> bool:
        return (
            abs(self.beta - 1.0) < _EUT_EPS
            and abs(self.lam - 1.0) < _EUT_EPS
            and abs(self.mu - 1.0) < _EUT_EPS
        )

    @property
    def has_linear_value(self) -> bool:
        """True when the value function is the identity (no kinks)."""
        return abs(self.beta - 1.0) < _EUT_EPS and abs(self.lam - 1.0) < _EUT_EPS


@dataclass(frozen=True)
class DemandDistribution:
    """Discrete belief over remaining monthly demand.

    Outcomes are strictly increasing quantities in GB with probabilities
    that sum to one.  Zero-probability outcomes are permitted (they
    simply receive zero decision weight).
    """

    quantities: tuple[float, ...]
    probabilities: tuple[float, ...]

    def __post_init__(self) -> None:
        qs, ps = self.quantities, self.probabilities
        if len(qs) == 0:
            raise ValueError("demand distribution needs at least one outcome")
        if len(qs) != len(ps):
            raise ValueError("quantities and probabilities differ in length")
        if any(q < 0 for q in qs):
            raise ValueError("demand quantities must be non-negative")
        if any(b <= a for a, b in zip(qs, qs[1:])):
            raise ValueError("demand quantities must be strictly increasing")
        if any(p < 0 for p in ps):
            raise ValueError("probabilities must be non-negative")
        if abs(sum(ps) - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {sum(ps)!r}, expected 1")

    # -- constructors -------------------------------------------------

    @classmethod
    def from_samples(
        cls,
        quantities,
        probabilities=None,
        merge_tol: float = 1e-12,
    ) -> "DemandDistribution":
        """Build a distribution from possibly unsorted, repeated samples.

        Equal quantities (within ``merge_tol``) are merged by summing
        their probabilities.  When ``probabilities`` is omitted the
        samples are taken as equally likely.
        """
        qs = [float(q) for q in quantities]
        if probabilities is None:
            ps = [1.0 / len(qs)] * len(qs)
        else:
            ps = [float(p) for p in probabilities]
        order = sorted(range(len(qs)), key=lambda i: qs[i])
        merged_q: list[float] = []
        merged_p: list[float] = []
        for i in order:
            if merged_q and abs(qs[i] - merged_q[-1]) <= merge_tol:
                merged_p[-1] += ps[i]
            else:
                merged_q.append(qs[i])
                merged_p.append(ps[i])
        return cls(tuple(merged_q), tuple(merged_p))

    # -- views ---------------------------------------------------------

    def quantity_array(self) -> np.ndarray:
        return np.asarray(self.quantities, dtype=float)

    def probability_array(self) -> np.ndarray:
        return np.asarray(self.probabilities, dtype=float)

    @property
    def lowest(self) -> float:
        return self.quantities[0]

    @property
    def highest(self) -> float:
        return self.quantities[-1]

    def pivot_index(self, quota: float) -> int:
        """Number of outcomes strictly below ``quota``.

        With the convention that outcomes ``1..pivot`` are covered by
        the quota and ``pivot+1..I`` exceed it.
        """
        return int(sum(1 for q in self.quantities if q < quota))

    def straddles(self, quota: float) -> bool:
        """True when the lowest outcome is below and the highest above
        the quota, so both buying and selling are non-trivial."""
        return self.lowest < quota and self.highest > quota


@dataclass(frozen=True)
class UserState:
    """Current quota position of a user within a billing cycle."""

    quota: float
    kappa: float = DEFAULT_KAPPA

    def __post_init__(self) -> None:
        if not self.quota > 0:
            raise ValueError(f"quota must be positive, got {self.quota}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")


@dataclass(frozen=True)
class MarketQuote:
    """Best prices currently available on the trading platform.

    ``min_sell_price`` is the cheapest ask a buyer would lift;
    ``max_buy_price`` is the highest bid a seller would hit.  An order
    book never crosses, so ``max_buy_price <= min_sell_price``.
    """

    min_sell_price: float
    max_buy_price: float

    def __post_init__(self) -> None:
        if not self.max_buy_price > 0:
            raise ValueError("max_buy_price must be positive")
        if self.max_buy_price > self.min_sell_price + 1e-12:
            raise ValueError(
                "quote is crossed: max_buy_price exceeds min_sell_price"
            )

    def validate_against(self, state: UserState) -> None:
        """Reject quotes at or above the overage rate: trading at such
        prices can never beat simply paying (or incurring) overage."""
        if self.min_sell_price >= state.kappa or self.max_buy_price >= state.kappa:
            raise ValueError(
                f"quoted prices must stay below the overage rate {state.kappa}"
            )


# ---------------------------------------------------------------------
# elementary pieces
# ---------------------------------------------------------------------


def value(outcome, profile: RiskProfile):
    """Prospect-theory value of a monetary outcome relative to the
    reference point.

    Gains of size x are worth ``x**beta``, losses of size x are worth
    ``-lam * x**beta``.  Accepts scalars or arrays.
    """
    x = np.asarray(outcome, dtype=float)
    mag = np.abs(x) ** profile.beta
    out = np.where(x >= 0.0, mag, -profile.lam * mag)
    return float(out) if np.ndim(outcome) == 0 else out


def weight(probability, profile: RiskProfile):
    """Prelec decision weight ``exp(-(-ln p)**mu)``.

    Continuously extended with ``weight(0) = 0``; ``weight(1) = 1``.
    Accepts scalars or arrays.
    """
    p = np.asarray(probability, dtype=float)
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    out = np.zeros(p.shape)
    pos = p > 0.0
    out[pos] = np.exp(-((-np.log(p[pos])) ** profile.mu))
    return float(out) if np.ndim(probability) == 0 else out


def satisfaction_loss(net_quota, kappa: float = DEFAULT_KAPPA):
    """Monetary consequence of ending the month with ``net_quota`` GB.

    Zero when the quota covers demand (``net_quota >= 0``); otherwise
    the overage bill ``kappa * net_quota`` (a negative amount).
    Accepts scalars or arrays.
    """
    y = np.asarray(net_quota, dtype=float)
    out = np.where(y < 0.0, kappa * y, 0.0)
    return float(out) if np.ndim(net_quota) == 0 else out


def reference_point(
    policy: ReferencePolicy, state: UserState, demand: DemandDistribution
) -> float:
    """Monetary reference against which outcomes are framed.

    The high-expectation frame anchors at zero (no overage); the
    low-expectation frame anchors at the overage bill of the highest
    demand outcome, a non-positive amount.
    """
    if policy is ReferencePolicy.HIGH:
        return 0.0
    return float(satisfaction_loss(state.quota - demand.highest, state.kappa))


# ---------------------------------------------------------------------
# trade objectives
# ---------------------------------------------------------------------


def _quantity_array(q) -> tuple[np.ndarray, bool]:
    arr = np.asarray(q, dtype=float)
    return np.atleast_1d(arr), arr.ndim == 0


def buyer_objective(
    quantity,
    quote: MarketQuote,
    state: UserState,
    demand: DemandDistribution,
    profile: RiskProfile,
    policy: ReferencePolicy | None = None,
):
    """Weighted prospect value of buying ``quantity`` GB at the current
    minimum selling price.

    Each demand outcome contributes the value of (purchase cost +
    residual overage bill - reference), weighted by its Prelec decision
    weight.  Accepts a scalar quantity or an array of quantities.
    """
    policy = profile.reference if policy is None else policy
    q, scalar = _quantity_array(quantity)
    d = demand.quantity_array()
    w = weight(demand.probability_array(), profile)
    ref = reference_point(policy, state, demand)
    net = state.quota + q[:, None] - d[None, :]
    outcome = (
        -quote.min_sell_price * q[:, None]
        + satisfaction_loss(net, state.kappa)
        - ref
    )
    util = (w[None, :] * value(outcome, profile)).sum(axis=1)
    return float(util[0]) if scalar else util


def seller_objective(
    quantity,
    quote: MarketQuote,
    state: UserState,
    demand: DemandDistribution,
    profile: RiskProfile,
    policy: ReferencePolicy | None = None,
):
    """Weighted prospect value of selling ``quantity`` GB at the current
    maximum buying price.

    Mirror image of :func:`buyer_objective`: revenue comes in, quota
    goes out.  Accepts a scalar quantity or an array of quantities.
    """
    policy = profile.reference if policy is None else policy
    q, scalar = _quantity_array(quantity)
    d = demand.quantity_array()
    w = weight(demand.probability_array(), profile)
    ref = reference_point(policy, state, demand)
    net = state.quota - q[:, None] - d[None, :]
    outcome = (
        quote.max_buy_price * q[:, None]
        + satisfaction_loss(net, state.kappa)
        - ref
    )
    util = (w[None, :] * value(outcome, profile)).sum(axis=1)
    return float(util[0]) if scalar else util


# ---------------------------------------------------------------------
# analytic first derivatives (used by the optimizer's critical-point
# search; valid between the piecewise boundaries, where no outcome
# argument is exactly zero and no coverage status flips)
# ---------------------------------------------------------------------


def _value_slope(x: np.ndarray, profile: RiskProfile) -> np.ndarray:
    mag = np.abs(x) ** (profile.beta - 1.0)
    return profile.beta * mag * np.where(x < 0.0, profile.lam, 1.0)


def buyer_objective_derivative(
    quantity,
    quote: MarketQuote,
    state: UserState,
    demand: DemandDistribution,
    profile: RiskProfile,
    policy: ReferencePolicy | None = None,
):
    """d(buyer_objective)/dq, piecewise-smooth between breakpoints."""
    policy = profile.reference if policy is None else policy
    q, scalar = _quantity_array(quantity)
    d = demand.quantity_array()
    w = weight(demand.probability_array(), profile)
    ref = reference_point(policy, state, demand)
    pi = quote.min_sell_price
    net = state.quota + q[:, None] - d[None, :]
    outcome = -pi * q[:, None] + satisfaction_loss(net, state.kappa) - ref
    slope = np.where(net < 0.0, state.kappa - pi, -pi)
    deriv = (w[None, :] * _value_slope(outcome, profile) * slope).sum(axis=1)
    return float(deriv[0]) if scalar else deriv


def seller_objective_derivative(
    quantity,
    quote: MarketQuote,
    state: UserState,
    demand: DemandDistribution,
    profile: RiskProfile,
    policy: ReferencePolicy | None = None,
):
    """d(seller_objective)/dq, piecewise-smooth between breakpoints."""
    policy = profile.reference if policy is None else policy
    q, scalar = _quantity_array(quantity)
    d = demand.quantity_array()
    w = weight(demand.probability_array(), profile)
    ref = reference_point(policy, state, demand)
    pi = quote.max_buy_price
    net = state.quota - q[:, None] - d[None, :]
    outcome = pi * q[:, None] + satisfaction_loss(net, state.kappa) - ref
    slope = np.where(net < 0.0, pi - state.kappa, pi)
    deriv = (w[None, :] * _value_slope(outcome, profile) * slope).sum(axis=1)
    return float(deriv[0]) if scalar else deriv
