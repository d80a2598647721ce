"""Optimal trade quantities and role choice.

The buy/sell objectives from :mod:`quotatrader.core` are piecewise
smooth in the traded quantity.  Pieces are delimited by

* breakpoints, where a demand outcome's coverage status flips (for a
  buyer at ``d_i - Q``, for a seller at ``Q - d_i``), and
* kinks (sellers only), where an outcome's monetary argument crosses
  zero and the value function changes branch, at
  ``(kappa * (Q - d_i) - R) / (kappa - price)`` with ``R`` the framing
  reference (zero under the high frame, the worst-case overage bill
  under the low frame).

Inside each piece the objective is convex, concave, or rises at most
once and then falls, and it is strictly decreasing beyond the last
breakpoint.  The global optimum therefore lies on a piece boundary or
at an interior stationary point, and the solvers enumerate exactly
those candidates: boundaries analytically, stationary points by
bracketing sign changes of the analytic derivative and bisecting.

The piece structure needs no assumption about where the quota sits in
the demand range: a position above every outcome simply has no buyer
breakpoints (buying never pays) and a full set of seller ones, and
vice versa, so the same enumeration covers riskless surpluses and
certain shortfalls.  Only the two-point closed forms and threshold
prices require the quota strictly inside the demand range, which their
derivations assume.

``brute_force_oracle`` deliberately ignores all of that structure and
maximises the raw objective on a dense grid; it exists so tests can
check the structured solvers against an independent method.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import (
    DemandDistribution,
    MarketQuote,
    ReferencePolicy,
    RiskProfile,
    UserState,
    buyer_objective,
    buyer_objective_derivative,
    reference_point,
    seller_objective,
    seller_objective_derivative,
    weight,
)

__all__ = [
    "Role",
    "TradeDecision",
    "IntervalShape",
    "SubintervalAnalysis",
    "ThresholdPrices",
    "analyze_buyer_subintervals",
    "analyze_seller_subintervals",
    "solve_buyer_general",
    "solve_seller_general",
    "solve_binary_buyer",
    "solve_binary_seller",
    "threshold_prices",
    "buyer_thresholds",
    "seller_thresholds",
    "decide_role",
    "brute_force_oracle",
]

_BETA_ONE_EPS = 1e-9
#: Derivatives are sampled this far inside each piece, because the
#: value-function slope diverges where an argument touches zero.
_EDGE_OFFSET = 1e-12
_SAMPLES_PER_PIECE = 64
_ROOT_XTOL = 1e-12


class Role(enum.Enum):
    BUYER = "buyer"
    SELLER = "seller"
    NONE = "none"


@dataclass(frozen=True)
class TradeDecision:
    """Outcome of a single-day optimisation.

    ``role`` is ``NONE`` exactly when ``quantity`` is zero; ``utility``
    is the objective value at the chosen quantity (equal to the no-trade
    utility when nothing is traded).
    """

    role: Role
    quantity: float
    utility: float

    def __post_init__(self) -> None:
        if (self.role is Role.NONE) != (self.quantity == 0.0):
            raise ValueError("role NONE must pair with quantity 0 and vice versa")
        if self.quantity < 0:
            raise ValueError("trade quantities are non-negative")


class IntervalShape(enum.Enum):
    CONVEX = "convex"
    CONCAVE = "concave"
    UNIMODAL = "unimodal"


@dataclass(frozen=True)
class SubintervalAnalysis:
    """Piecewise structure of an objective over the feasible range.

    ``edges`` runs from 0 to the largest useful quantity and includes
    every breakpoint and kink; ``shapes`` tags each piece between
    consecutive edges; ``critical_points`` are interior stationary
    points found on those pieces.  Beyond the last edge the objective
    is strictly decreasing, so the search stops there.
    """

    edges: tuple[float, ...]
    shapes: tuple[IntervalShape, ...]
    critical_points: tuple[float, ...]

    @property
    def candidates(self) -> tuple[float, ...]:
        return tuple(sorted(set(self.edges) | set(self.critical_points)))


# ---------------------------------------------------------------------
# shared machinery
# ---------------------------------------------------------------------


def _validate_problem(
    quote: MarketQuote, state: UserState, demand: DemandDistribution
) -> None:
    quote.validate_against(state)


def _merge_close(points, tol: float = 1e-9) -> list[float]:
    out: list[float] = []
    for p in sorted(points):
        if not out or p - out[-1] > tol:
            out.append(p)
    return out


def _stationary_points(deriv, edges: list[float]) -> list[float]:
    """Interior zeros of ``deriv`` between consecutive edges.

    Samples each open piece at evenly spaced points, brackets every
    sign change, and bisects.  The sampling density is far above the
    at-most-one crossing the piecewise analysis guarantees.
    """
    roots: list[float] = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 2 * _EDGE_OFFSET:
            continue
        xs = np.linspace(a + _EDGE_OFFSET, b - _EDGE_OFFSET, _SAMPLES_PER_PIECE)
        fs = deriv(xs)
        signs = np.sign(fs)
        for i in range(len(xs) - 1):
            if signs[i] == 0.0:
                roots.append(float(xs[i]))
            elif signs[i] * signs[i + 1] < 0.0:
                roots.append(
                    float(
                        brentq(
                            lambda x: float(deriv(x)),
                            float(xs[i]),
                            float(xs[i + 1]),
                            xtol=_ROOT_XTOL,
                        )
                    )
                )
        if signs[-1] == 0.0:
            roots.append(float(xs[-1]))
    return _merge_close(roots)


def _pick_best(objective, candidates: list[float]) -> tuple[float, float]:
    """Evaluate the objective on the candidate list and take the argmax.

    Candidates are sorted ascending and ties keep the first (smallest)
    quantity, so an indifferent user does not trade.
    """
    qs = np.asarray(candidates, dtype=float)
    us = objective(qs)
    i = int(np.argmax(us))
    return float(qs[i]), float(us[i])


def _decision(role: Role, quantity: float, utility: float) -> TradeDecision:
    if quantity <= 0.0:
        return TradeDecision(Role.NONE, 0.0, utility)
    return TradeDecision(role, quantity, utility)


# ---------------------------------------------------------------------
# sub-interval analysis
# ---------------------------------------------------------------------


def analyze_buyer_subintervals(
    quote: MarketQuote,
    state: UserState,
    demand: DemandDistribution,
    profile: RiskProfile,
    policy: ReferencePolicy | None = None,
) -> SubintervalAnalysis:
    """Piecewise structure of the buyer objective on [0, d_max - Q].

    Under the high reference every outcome argument is a loss, so each
    piece is convex and the optimum sits on a breakpoint.  Under the low
    reference every argument is a gain, each piece is concave, and one
    interior stationary point may appear.  Both facts hold whether or
    not the quota sits inside the demand range; when it covers every
    outcome the range collapses to the single point 0 (no reason to
    buy).
    """
    policy = profile.reference if policy is None else policy
    _validate_problem(quote, state, demand)
    q0 = state.quota
    edges = [0.0] + [d - q0 for d in demand.quantities if d > q0]
    if policy is ReferencePolicy.HIGH:
        shapes = [IntervalShape.CONVEX] * (len(edges) - 1)
        crits: list[float] = []
    else:
        shapes = [IntervalShape.CONCAVE] * (len(edges) - 1)
        if profile.beta < 1.0 - _BETA_ONE_EPS:
            deriv = lambda q: buyer_objective_derivative(
                q, quote, state, demand, profile, policy
            )
            crits = _stationary_points(deriv, edges)
        else:
            crits = []  # pieces are linear
    return SubintervalAnalysis(tuple(edges), tuple(shapes), tuple(crits))


def analyze_seller_subintervals(
    quote: MarketQuote,
    state: UserState,
    demand: DemandDistribution,
    profile: RiskProfile,
    policy: ReferencePolicy | None = None,
) -> SubintervalAnalysis:
    """Piecewise structure of the seller objective on [0, Q - d_min].

    Besides the coverage breakpoints, pieces are split where an
    outcome's argument changes sign (kinks of the value function);
    those points are candidates themselves, since with loss aversion
    the objective can peak exactly there.  An outcome's argument
    vanishes at ``(kappa*(Q - d) - R)/(kappa - price)`` with ``R`` the
    framing reference, which specialises to the familiar forms under
    either frame.  If no outcome falls below the quota there is nothing
    safe to sell — every unit sold costs ``kappa`` against revenue
    below it — and the range collapses to the single point 0.
    """
    policy = profile.reference if policy is None else policy
    _validate_problem(quote, state, demand)
    q0, kappa = state.quota, state.kappa
    price = quote.max_buy_price
    ref = reference_point(policy, state, demand)
    breakpoints = sorted(q0 - d for d in demand.quantities if d < q0)
    if not breakpoints:
        return SubintervalAnalysis((0.0,), (), ())
    q_hi = breakpoints[-1]

    kinks: list[float] = []
    if not profile.has_linear_value:
        raw = [(kappa * (q0 - d) - ref) / (kappa - price) for d in demand.quantities]
        kinks = [k for k in raw if 1e-12 < k < q_hi - 1e-12]

    edges = _merge_close([0.0] + breakpoints + kinks)
    if edges[-1] < q_hi:  # merge must never drop the outer boundary
        edges[-1] = q_hi

    shapes: list[IntervalShape] = []
    d_arr = demand.quantity_array()
    for a, b in zip(edges[:-1], edges[1:]):
        if policy is ReferencePolicy.HIGH:
            shapes.append(IntervalShape.UNIMODAL)
        else:
            mid = 0.5 * (a + b)
            args = price * mid + np.minimum(q0 - mid - d_arr, 0.0) * kappa - ref
            shapes.append(
                IntervalShape.CONCAVE if np.all(args >= -1e-12) else IntervalShape.UNIMODAL
            )

    if profile.beta < 1.0 - _BETA_ONE_EPS:
        deriv = lambda q: seller_objective_derivative(
            q, quote, state, demand, profile, policy
        )
        crits = _stationary_points(deriv, edges)
    else:
        crits = []
    return SubintervalAnalysis(tuple(edges), tuple(shapes), tuple(crits))


# ---------------------------------------------------------------------
# general solvers
# ---------------------------------------------------------------------


def solve_buyer_general(
    quote: MarketQuote,
    state: UserState,
    demand: DemandDistribution,
    profile: RiskProfile,
    policy: ReferencePolicy | None = None,
) -> TradeDecision:
    """Best buying quantity against the minimum selling price."""
    policy = profile.reference if policy is None else policy
    analysis = analyze_buyer_subintervals(quote, state, demand, profile, policy)
    q, u = _pick_best(
        lambda qs: buyer_objective(qs, quote, state, demand, profile, policy),
        list(analysis.candidates),
    )
    return _decision(Role.BUYER, q, u)


def solve_seller_general(
    quote: MarketQuote,
    state: UserState,
    demand: DemandDistribution,
    profile: RiskProfile,
    policy: ReferencePolicy | None = None,
) -> TradeDecision:
    """Best selling quantity against the maximum buying price."""
    policy = profile.reference if policy is None else policy
    analysis = analyze_seller_subintervals(quote, state, demand, profile, policy)
    q, u = _pick_best(
        lambda qs: seller_objective(qs, quote, state, demand, profile, policy),
        list(analysis.candidates),
    )
    return _decision(Role.SELLER, q, u)


def decide_role(
    quote: MarketQuote,
    state: UserState,
    demand: DemandDistribution,
    profile: RiskProfile,
    policy: ReferencePolicy | None = None,
) -> TradeDecision:
    """Two-stage choice: best quantity per role, then the better role.

    Exact utility ties resolve away from trading; in particular when
    neither side beats staying put the result is ``Role.NONE``.
    """
    buy = solve_buyer_general(quote, state, demand, profile, policy)
    sell = solve_seller_general(quote, state, demand, profile, policy)
    if buy.utility > sell.utility:
        return buy
    if sell.utility > buy.utility:
        return sell
    if buy.quantity == 0.0:
        return buy
    if sell.quantity == 0.0:
        return sell
    return sell


# ---------------------------------------------------------------------
# binary-demand closed forms
# ---------------------------------------------------------------------


def _binary_inputs(
    state: UserState, low_demand: float, high_demand: float, high_prob: float
):
    if not low_demand < state.quota < high_demand:
        raise ValueError("binary case needs d_low < quota < d_high")
    if not 0.0 < high_prob < 1.0:
        raise ValueError("high_prob must lie strictly between 0 and 1")


def _sell_all_log_residual(
    price: float,
    state: UserState,
    low_demand: float,
    high_demand: float,
    w_hi: float,
    w_lo: float,
    profile: RiskProfile,
) -> float:
    """Log of the marginal-utility ratio at the full surplus sale.

    Positive values mean the marginal loss from deeper overage exposure
    still outweighs the marginal revenue at ``Q - d_low``, i.e. the
    price is below the sell-everything threshold.  Strictly decreasing
    in the price, which makes bracketing sound.
    """
    kappa, q0 = state.kappa, state.quota
    beta, lam = profile.beta, profile.lam
    surplus = q0 - low_demand
    shortfall = high_demand - q0
    lhs = (
        math.log(lam)
        + beta * math.log(kappa - price)
        + math.log(w_hi)
        - beta * math.log(price)
        - math.log(w_lo)
    )
    bend = (beta - 1.0) * math.log1p(
        kappa * shortfall / ((kappa - price) * surplus)
    )
    return lhs + bend


def _sell_all_low_ref_residual(
    price: float,
    state: UserState,
    low_demand: float,
    high_demand: float,
    w_hi: float,
    w_lo: float,
    profile: RiskProfile,
) -> float:
    """Utility gap between selling the full surplus and not selling,
    framed against the worst-case reference.  Strictly increasing in
    the price; its root is the low-reference selling threshold."""
    kappa, q0 = state.kappa, state.quota
    beta, lam = profile.beta, profile.lam
    surplus = q0 - low_demand
    base = kappa * (high_demand - q0)
    gain = w_lo * ((price * surplus + base) ** beta - base**beta)
    loss = lam * w_hi * ((kappa - price) * surplus) ** beta
    return gain - loss


@dataclass(frozen=True)
class ThresholdPrices:
    """Critical prices of the binary-demand problem.

    A buyer lifts the ask only below their buying threshold; a seller
    hits the bid only above their selling threshold.  The expected
    utility thresholds coincide at ``kappa * high_prob``; the
    prospect-theory ones depend on the reference framing.
    """

    buyer_eut: float
    buyer_pt_high: float
    buyer_pt_low: float
    seller_eut: float
    seller_pt_high: float
    seller_pt_low: float


def threshold_prices(
    state: UserState,
    low_demand: float,
    high_demand: float,
    high_prob: float,
    profile: RiskProfile,
) -> ThresholdPrices:
    """All six critical prices for a binary demand belief."""
    _binary_inputs(state, low_demand, high_demand, high_prob)
    kappa = state.kappa
    w_hi = weight(high_prob, profile)
    w_lo = weight(1.0 - high_prob, profile)
    share = w_hi / (w_hi + w_lo)
    eut = kappa * high_prob
    buyer_high = kappa * share ** (1.0 / profile.beta)
    buyer_low = kappa * share

    lo, hi = kappa * 1e-9, kappa * (1.0 - 1e-9)
    seller_high = float(
        brentq(
            _sell_all_log_residual,
            lo,
            hi,
            args=(state, low_demand, high_demand, w_hi, w_lo, profile),
            xtol=1e-12,
        )
    )
    seller_low = float(
        brentq(
            _sell_all_low_ref_residual,
            lo,
            hi,
            args=(state, low_demand, high_demand, w_hi, w_lo, profile),
            xtol=1e-12,
        )
    )
    return ThresholdPrices(
        buyer_eut=eut,
        buyer_pt_high=buyer_high,
        buyer_pt_low=buyer_low,
        seller_eut=eut,
        seller_pt_high=seller_high,
        seller_pt_low=seller_low,
    )


def buyer_thresholds(
    state: UserState,
    low_demand: float,
    high_demand: float,
    high_prob: float,
    profile: RiskProfile,
) -> ThresholdPrices:
    """Critical buying prices (see :func:`threshold_prices`)."""
    return threshold_prices(state, low_demand, high_demand, high_prob, profile)


def seller_thresholds(
    state: UserState,
    low_demand: float,
    high_demand: float,
    high_prob: float,
    profile: RiskProfile,
) -> ThresholdPrices:
    """Critical selling prices (see :func:`threshold_prices`)."""
    return threshold_prices(state, low_demand, high_demand, high_prob, profile)


def solve_binary_buyer(
    quote: MarketQuote,
    state: UserState,
    low_demand: float,
    high_demand: float,
    high_prob: float,
    profile: RiskProfile,
    policy: ReferencePolicy | None = None,
) -> TradeDecision:
    """Closed-form buyer solution for a two-outcome demand belief.

    All-or-nothing at the threshold price, except under the low
    reference with ``beta < 1`` where diminishing sensitivity yields an
    interior purchase that shrinks as the price rises.
    """
    policy = profile.reference if policy is None else policy
    demand = DemandDistribution(
        (low_demand, high_demand), (1.0 - high_prob, high_prob)
    )
    _validate_problem(quote, state, demand)
    th = threshold_prices(state, low_demand, high_demand, high_prob, profile)
    price = quote.min_sell_price
    kappa = state.kappa
    shortfall = high_demand - state.quota

    if policy is ReferencePolicy.HIGH:
        q = shortfall if price < th.buyer_pt_high else 0.0
    elif abs(profile.beta - 1.0) < _BETA_ONE_EPS:
        q = shortfall if price < th.buyer_pt_low else 0.0
    else:
        w_hi = weight(high_prob, profile)
        w_lo = weight(1.0 - high_prob, profile)
        ratio = w_hi * (kappa - price) ** profile.beta / (w_lo * price)
        log_slope = math.log(ratio) / (profile.beta - 1.0)
        if log_slope > 700.0:  # marginal cover value vanishes
            q = 0.0
        else:
            q = min(kappa * shortfall / (math.exp(log_slope) + price), shortfall)
    u = buyer_objective(q, quote, state, demand, profile, policy)
    return _decision(Role.BUYER, q, u)


def solve_binary_seller(
    quote: MarketQuote,
    state: UserState,
    low_demand: float,
    high_demand: float,
    high_prob: float,
    profile: RiskProfile,
    policy: ReferencePolicy | None = None,
) -> TradeDecision:
    """Closed-form seller solution for a two-outcome demand belief.

    Under the high reference the seller dumps the whole surplus above
    the threshold and, with ``beta < 1``, still sells a small interior
    amount below it (risk seeking in losses).  Under the low reference
    the choice is all-or-nothing at the low-reference threshold.
    """
    policy = profile.reference if policy is None else policy
    demand = DemandDistribution(
        (low_demand, high_demand), (1.0 - high_prob, high_prob)
    )
    _validate_problem(quote, state, demand)
    th = threshold_prices(state, low_demand, high_demand, high_prob, profile)
    price = quote.max_buy_price
    kappa = state.kappa
    surplus = state.quota - low_demand
    shortfall = high_demand - state.quota

    if policy is ReferencePolicy.HIGH:
        if price > th.seller_pt_high:
            q = surplus
        elif abs(profile.beta - 1.0) < _BETA_ONE_EPS:
            q = 0.0
        else:
            w_hi = weight(high_prob, profile)
            w_lo = weight(1.0 - high_prob, profile)
            ratio = (
                w_lo
                * price**profile.beta
                / (w_hi * profile.lam * (kappa - price) ** profile.beta)
            )
            log_growth = math.log(ratio) / (profile.beta - 1.0)
            if log_growth > 700.0:  # residual sale is vanishingly small
                q = 0.0
            else:
                denom = (kappa - price) * math.expm1(log_growth)
                q = surplus if denom <= 0.0 else min(kappa * shortfall / denom, surplus)
    else:
        q = surplus if price > th.seller_pt_low else 0.0
    u = seller_objective(q, quote, state, demand, profile, policy)
    return _decision(Role.SELLER, q, u)


# ---------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, lo: float, hi: float, iters: int = 90) -> tuple[float, float]:
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
        if b - a < 1e-13:
            break
    mid = 0.5 * (a + b)
    return mid, f(mid)


def brute_force_oracle(
    role: Role,
    quote: MarketQuote,
    state: UserState,
    demand: DemandDistribution,
    profile: RiskProfile,
    policy: ReferencePolicy | None = None,
    step: float = 1e-4,
    q_max: float | None = None,
) -> TradeDecision:
    """Exhaustive-search reference solution.

    Maximises the raw objective on a uniform grid of the feasible range
    and polishes the best grid point with one golden-section pass.  Slow
    and structure-blind by design; use it to validate the solvers, not
    to trade.
    """
    policy = profile.reference if policy is None else policy
    _validate_problem(quote, state, demand)
    if role is Role.BUYER:
        objective = lambda qs: buyer_objective(qs, quote, state, demand, profile, policy)
        hi = demand.highest - state.quota if q_max is None else q_max
    elif role is Role.SELLER:
        objective = lambda qs: seller_objective(qs, quote, state, demand, profile, policy)
        hi = state.quota - demand.lowest if q_max is None else q_max
    else:
        raise ValueError("oracle solves for BUYER or SELLER only")
    hi = max(hi, 0.0)  # fully covered / fully short positions leave no range

    grid = np.arange(0.0, hi + step / 2.0, step)
    if grid[-1] < hi:
        grid = np.append(grid, hi)
    utilities = objective(grid)
    i = int(np.argmax(utilities))
    best_q, best_u = float(grid[i]), float(utilities[i])

    lo_b = float(grid[max(i - 1, 0)])
    hi_b = float(grid[min(i + 1, len(grid) - 1)])
    if hi_b > lo_b:
        q_ref, u_ref = _golden_max(lambda x: float(objective(x)), lo_b, hi_b)
        if u_ref > best_u:
            best_q, best_u = q_ref, u_ref
    return _decision(role, best_q, best_u)
