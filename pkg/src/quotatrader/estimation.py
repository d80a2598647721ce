"""Risk-parameter estimation from stated indifference prices.

Once a day the user answers two questions: at what price per GB would
you be exactly indifferent about buying enough quota to cover the worst
demand outcome, and at what price about selling your whole predicted
surplus?  Each answer pins an equality between the utility of the full
trade and the utility of standing pat.

Under either reference framing the buy-side equality only involves
outcomes on one side of the reference point, so the loss-aversion
multiplier cancels and the curvature ``beta`` can be recovered alone:
the no-trade side collapses to a weighted power mean that is strictly
increasing in ``beta``, giving a unique root.  Substituting that
``beta`` into the sell-side equality leaves an expression linear in the
loss-aversion multiplier, which is then solved directly.  Under the
low reference the sell-side equality contains no loss terms at all, so
loss aversion is unidentifiable and estimation reports an error.

Per-day estimates over a billing cycle are averaged into the final
parameter pair; days with inconsistent answers are skipped and
reported.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import (
    DEFAULT_KAPPA,
    DemandDistribution,
    MarketQuote,
    ReferencePolicy,
    RiskProfile,
    UserState,
    buyer_objective,
    seller_objective,
    weight,
)

__all__ = [
    "EstimationError",
    "EstimationWarning",
    "IndifferenceReport",
    "EstimationResult",
    "indifference_residuals",
    "solve_beta",
    "solve_lambda",
    "estimate_over_cycle",
    "synthesize_indifference_prices",
]

_BETA_FLOOR = 1e-6


class EstimationError(ValueError):
    """Raised when stated prices admit no consistent parameter value."""


class EstimationWarning(UserWarning):
    """Emitted when a solution is clamped back into its valid range."""


@dataclass(frozen=True)
class IndifferenceReport:
    """One day's elicitation: the demand outlook the user faced and the
    two prices at which they declared themselves indifferent."""

    day_index: int
    quota_at_day: float
    demand_snapshot: DemandDistribution
    buy_price: float
    sell_price: float

    def __post_init__(self) -> None:
        if self.day_index < 1:
            raise ValueError("day_index is 1-based")
        if self.quota_at_day <= 0:
            raise ValueError("quota_at_day must be positive")
        if self.buy_price <= 0 or self.sell_price <= 0:
            raise ValueError("indifference prices must be positive")


@dataclass(frozen=True)
class EstimationResult:
    """Cycle-level estimate: the averaged parameters, the per-day pairs
    they came from, and the days that had to be skipped."""

    beta: float
    lam: float
    per_day: tuple[tuple[int, float, float], ...]
    skipped: tuple[tuple[int, str], ...]

    @property
    def days_used(self) -> int:
        return len(self.per_day)


def _check_report(report: IndifferenceReport, kappa: float) -> None:
    if not report.demand_snapshot.straddles(report.quota_at_day):
        raise EstimationError(
            "demand snapshot must straddle the quota for elicitation"
        )
    if report.buy_price >= kappa or report.sell_price >= kappa:
        raise EstimationError(
            f"indifference prices must stay below the overage rate {kappa}"
        )


def indifference_residuals(
    beta: float,
    lam: float,
    report: IndifferenceReport,
    mu: float,
    reference: ReferencePolicy = ReferencePolicy.HIGH,
    kappa: float = DEFAULT_KAPPA,
) -> tuple[float, float]:
    """Utility gaps (full trade minus no trade) implied by the report.

    Both residuals are zero when ``(beta, lam)`` are exactly the
    parameters whose indifference the reported prices express.  Used as
    ground truth in tests and for diagnostics; the estimators below
    work with reduced forms instead.
    """
    _check_report(report, kappa)
    profile = RiskProfile(beta=beta, lam=lam, mu=mu)
    policy = reference
    state = UserState(report.quota_at_day, kappa)
    demand = report.demand_snapshot
    buy_quote = MarketQuote(report.buy_price, report.buy_price)
    sell_quote = MarketQuote(report.sell_price, report.sell_price)
    shortfall = demand.highest - state.quota
    surplus = state.quota - demand.lowest
    no_trade = buyer_objective(0.0, buy_quote, state, demand, profile, policy)
    buy_gap = (
        buyer_objective(shortfall, buy_quote, state, demand, profile, policy) - no_trade
    )
    sell_gap = (
        seller_objective(surplus, sell_quote, state, demand, profile, policy) - no_trade
    )
    return float(buy_gap), float(sell_gap)


# ---------------------------------------------------------------------
# reduced-form solvers
# ---------------------------------------------------------------------


def _no_trade_magnitudes(
    report: IndifferenceReport, policy: ReferencePolicy, kappa: float
) -> tuple[np.ndarray, float]:
    """Absolute outcome arguments of the no-trade prospect and of the
    full-cover purchase, all lying on one side of the reference."""
    demand = report.demand_snapshot
    quota = report.quota_at_day
    d = demand.quantity_array()
    if policy is ReferencePolicy.HIGH:
        no_trade = kappa * np.maximum(d - quota, 0.0)
        target = report.buy_price * (demand.highest - quota)
    else:
        top = demand.highest
        # covered outcomes gain the whole avoided worst-case bill, the
        # rest gain the bill difference between the worst case and
        # their own overage
        no_trade = np.where(d <= quota, kappa * (top - quota), kappa * (top - d))
        target = (kappa - report.buy_price) * (top - quota)
    return no_trade, float(target)


def solve_beta(
    report: IndifferenceReport,
    mu: float,
    reference: ReferencePolicy = ReferencePolicy.HIGH,
    kappa: float = DEFAULT_KAPPA,
) -> float:
    """Curvature implied by the buy-side indifference price.

    With every argument on one side of the reference, loss aversion
    cancels and the equality reads: full-cover spend equals the
    decision-weighted power mean of the no-trade bills.  The power mean
    is strictly increasing in ``beta``, so a sign-change bracket on
    ``(0, 1]`` pins the root; answers implying ``beta > 1`` are clamped
    to 1 with a warning.
    """
    _check_report(report, kappa)
    weight_profile = RiskProfile(mu=mu)
    w = weight(report.demand_snapshot.probability_array(), weight_profile)
    total = float(w.sum())
    if total <= 0.0:
        raise EstimationError("demand snapshot carries no decision weight")
    magnitudes, target = _no_trade_magnitudes(report, reference, kappa)
    mask = magnitudes > 0.0
    if not np.any(mask):
        raise EstimationError("no-trade prospect has no nonzero outcomes")
    shares = w[mask] / total
    mags = magnitudes[mask]
    log_target = math.log(target)

    def power_mean_gap(beta: float) -> float:
        return float(np.log(np.dot(shares, mags**beta)) / beta - log_target)

    lo, hi = _BETA_FLOOR, 1.0
    gap_hi = power_mean_gap(hi)
    if gap_hi < 0.0:
        warnings.warn(
            "stated buying price implies curvature above 1; clamping",
            EstimationWarning,
            stacklevel=2,
        )
        return 1.0
    gap_lo = power_mean_gap(lo)
    if gap_lo > 0.0:
        raise EstimationError("buying price is inconsistent with any curvature")
    if gap_lo == 0.0:
        return lo
    if gap_hi == 0.0:
        return hi
    return float(brentq(power_mean_gap, lo, hi, xtol=1e-12))


def solve_lambda(
    beta: float,
    report: IndifferenceReport,
    mu: float,
    reference: ReferencePolicy = ReferencePolicy.HIGH,
    kappa: float = DEFAULT_KAPPA,
) -> float:
    """Loss aversion implied by the sell-side indifference price, given
    the curvature.

    The sell-side equality is linear in the multiplier: gains differ on
    the two sides by exactly the amount the loss terms must absorb.  A
    vanishing loss coefficient (for instance when the outcomes that a
    sale pushes into losses carry no decision weight) leaves the
    multiplier unidentifiable and raises ``EstimationError``.
    """
    _check_report(report, kappa)
    weight_profile = RiskProfile(mu=mu)
    demand = report.demand_snapshot
    quota = report.quota_at_day
    w = weight(demand.probability_array(), weight_profile)
    d = demand.quantity_array()
    surplus = quota - demand.lowest
    if reference is ReferencePolicy.HIGH:
        ref = 0.0
    else:
        ref = -kappa * (demand.highest - quota)
    sell_args = (
        report.sell_price * surplus
        + np.minimum(demand.lowest - d, 0.0) * kappa
        - ref
    )
    stay_args = np.minimum(quota - d, 0.0) * kappa - ref

    def split(args: np.ndarray) -> tuple[float, float]:
        gains = float(np.dot(w, np.where(args >= 0.0, np.abs(args) ** beta, 0.0)))
        losses = float(np.dot(w, np.where(args < 0.0, np.abs(args) ** beta, 0.0)))
        return gains, losses

    sell_gain, sell_loss = split(sell_args)
    stay_gain, stay_loss = split(stay_args)
    loss_coeff = sell_loss - stay_loss
    gain_gap = sell_gain - stay_gain
    if abs(loss_coeff) < 1e-12 * (1.0 + sell_loss + stay_loss):
        raise EstimationError(
            "loss terms cancel between selling and staying; "
            "loss aversion is unidentifiable from this report"
        )
    lam = gain_gap / loss_coeff
    if lam < 1.0:
        if lam <= 0.0:
            raise EstimationError(
                "selling price is inconsistent with any loss-aversion level"
            )
        warnings.warn(
            "stated selling price implies loss aversion below 1; clamping",
            EstimationWarning,
            stacklevel=2,
        )
        return 1.0
    return float(lam)


def estimate_over_cycle(
    reports,
    mu: float,
    reference: ReferencePolicy = ReferencePolicy.HIGH,
    kappa: float = DEFAULT_KAPPA,
) -> EstimationResult:
    """Average the per-day parameter estimates over a billing cycle.

    Days whose answers admit no consistent solution are skipped and
    listed in the result; if every day fails, estimation fails.
    """
    per_day: list[tuple[int, float, float]] = []
    skipped: list[tuple[int, str]] = []
    for report in reports:
        try:
            beta = solve_beta(report, mu, reference, kappa)
            lam = solve_lambda(beta, report, mu, reference, kappa)
        except EstimationError as exc:
            skipped.append((report.day_index, str(exc)))
            continue
        per_day.append((report.day_index, beta, lam))
    if not per_day:
        raise EstimationError(
            "no usable elicitation days: "
            + "; ".join(reason for _, reason in skipped)
        )
    betas = [b for _, b, _ in per_day]
    lams = [l for _, _, l in per_day]
    return EstimationResult(
        beta=float(np.mean(betas)),
        lam=float(np.mean(lams)),
        per_day=tuple(per_day),
        skipped=tuple(skipped),
    )


# ---------------------------------------------------------------------
# forward generation (the inverse problem, used to validate round trips
# and to script personas)
# ---------------------------------------------------------------------


def synthesize_indifference_prices(
    state: UserState,
    demand: DemandDistribution,
    profile: RiskProfile,
    policy: ReferencePolicy | None = None,
) -> tuple[float, float]:
    """Prices at which a user with known parameters is exactly
    indifferent about the full-cover purchase and the full-surplus sale.

    Solved by bisecting the utility gap in the price, which is strictly
    monotone (paying more can only hurt, earning more can only help).
    """
    policy = profile.reference if policy is None else policy
    if not demand.straddles(state.quota):
        raise ValueError("demand must straddle the quota")
    kappa = state.kappa
    shortfall = demand.highest - state.quota
    surplus = state.quota - demand.lowest

    def buy_gap(price: float) -> float:
        quote = MarketQuote(price, price)
        return float(
            buyer_objective(shortfall, quote, state, demand, profile, policy)
            - buyer_objective(0.0, quote, state, demand, profile, policy)
        )

    def sell_gap(price: float) -> float:
        quote = MarketQuote(price, price)
        return float(
            seller_objective(surplus, quote, state, demand, profile, policy)
            - seller_objective(0.0, quote, state, demand, profile, policy)
        )

    lo, hi = kappa * 1e-9, kappa * (1.0 - 1e-9)
    buy_price = float(brentq(buy_gap, lo, hi, xtol=1e-12))
    sell_price = float(brentq(sell_gap, lo, hi, xtol=1e-12))
    return buy_price, sell_price
