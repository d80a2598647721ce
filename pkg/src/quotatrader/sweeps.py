"""Parameter sweeps tracing how thresholds and trade sizes move.

Each function walks one behavioural parameter across a grid while
holding a reference instance fixed, and returns the resulting curve as
a :class:`Sweep`.  These are the work-horses behind the trend plots in
``demos/`` and the regression checks on qualitative behaviour:

* critical buying price against the gain curvature ``beta`` (rises) and
  the loss multiplier ``lam`` (no effect under worst-case framing);
* critical buying price against the probability distortion ``mu``,
  whose direction flips with the shortfall probability — overweighted
  small risks push the threshold up, underweighted large ones pull it
  down, and an even chance is left untouched;
* optimal sale size against ``lam`` (shrinks) and against ``beta``,
  where the direction depends on the bid: below a crossover price more
  curvature means selling less, above it selling more.  The crossover
  itself is located by scanning the bid axis for the sign change.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    DEFAULT_KAPPA,
    DemandDistribution,
    MarketQuote,
    ReferencePolicy,
    RiskProfile,
    UserState,
)
from .optimizer import solve_seller_general, threshold_prices

__all__ = [
    "Sweep",
    "standard_seller_instance",
    "buying_threshold_vs_beta",
    "buying_threshold_vs_loss_aversion",
    "buying_threshold_vs_distortion",
    "buying_threshold_vs_shortfall_chance",
    "selling_quantity_vs_loss_aversion",
    "selling_quantity_vs_beta",
    "selling_quantity_vs_bid",
    "beta_trend_at_bid",
    "find_selling_crossover_bid",
]


@dataclass(frozen=True)
class Sweep:
    """One curve: a parameter grid, the measured response, and context.

    ``context`` records the frozen instance parameters so a curve is
    reproducible from its own metadata.
    """

    parameter: str
    grid: tuple[float, ...]
    outputs: tuple[float, ...]
    context: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.grid) != len(self.outputs):
            raise ValueError("grid and outputs must align")
        if len(self.grid) < 2:
            raise ValueError("a sweep needs at least two grid points")

    def rows(self) -> list[dict[str, float]]:
        """Flat records (one per grid point) for CSV or DataFrame export."""
        return [
            {self.parameter: g, "output": y, **self.context}
            for g, y in zip(self.grid, self.outputs)
        ]


# ---------------------------------------------------------------------
# reference instances
# ---------------------------------------------------------------------

# Binary belief used for the threshold sweeps: a month either stays one
# unit under quota or runs one unit over.
_BINARY_LOW = 1.0
_BINARY_HIGH = 3.0


def standard_seller_instance(
    quota: float = 2.0, kappa: float = DEFAULT_KAPPA
) -> tuple[UserState, DemandDistribution]:
    """A 20-outcome demand fan under a 2 GB plan, tilted toward surplus.

    Outcomes run from 0.2 to 2.6 GB in even steps with uniform weight:
    three quarters of the mass sits below the plan, so a seller has
    genuine room to trade, while the five shortfall branches keep the
    sale from ever being free.  That balance is what lets the sale-size
    curves bend instead of pinning at zero or at the full surplus.
    """
    quantities = np.linspace(0.2, 2.6, 20)
    probabilities = np.full(20, 1.0 / 20)
    demand = DemandDistribution(tuple(quantities), tuple(probabilities))
    return UserState(quota=quota, kappa=kappa), demand


def _binary_threshold(
    high_prob: float, profile: RiskProfile, quota: float, kappa: float
) -> float:
    state = UserState(quota=quota, kappa=kappa)
    prices = threshold_prices(state, _BINARY_LOW, _BINARY_HIGH, high_prob, profile)
    return prices.buyer_pt_high


# ---------------------------------------------------------------------
# threshold curves
# ---------------------------------------------------------------------


def buying_threshold_vs_beta(
    betas=np.linspace(0.5, 1.0, 21),
    *,
    lam: float = 2.25,
    mu: float = 1.0,
    high_prob: float = 0.5,
    quota: float = 2.0,
    kappa: float = DEFAULT_KAPPA,
) -> Sweep:
    """Critical buying price as gain curvature sweeps up to linear."""
    grid = [float(b) for b in np.asarray(betas, dtype=float)]
    outputs = [
        _binary_threshold(high_prob, RiskProfile(beta=b, lam=lam, mu=mu), quota, kappa)
        for b in grid
    ]
    return Sweep(
        "beta",
        tuple(grid),
        tuple(outputs),
        {"lam": lam, "mu": mu, "high_prob": high_prob, "quota": quota},
    )


def buying_threshold_vs_loss_aversion(
    lams=np.linspace(1.0, 5.0, 17),
    *,
    beta: float = 0.88,
    mu: float = 1.0,
    high_prob: float = 0.5,
    quota: float = 2.0,
    kappa: float = DEFAULT_KAPPA,
) -> Sweep:
    """Critical buying price across loss multipliers.

    Under worst-case framing every buyer outcome sits on the loss side,
    so scaling losses rescales the whole objective and the curve comes
    out flat; the sweep exists to pin that invariance down numerically.
    """
    grid = [float(l) for l in np.asarray(lams, dtype=float)]
    outputs = [
        _binary_threshold(high_prob, RiskProfile(beta=beta, lam=l, mu=mu), quota, kappa)
        for l in grid
    ]
    return Sweep(
        "lam",
        tuple(grid),
        tuple(outputs),
        {"beta": beta, "mu": mu, "high_prob": high_prob, "quota": quota},
    )


def buying_threshold_vs_distortion(
    mus=np.linspace(0.5, 1.0, 21),
    *,
    high_prob: float,
    beta: float = 0.88,
    lam: float = 2.25,
    quota: float = 2.0,
    kappa: float = DEFAULT_KAPPA,
) -> Sweep:
    """Critical buying price as the probability distortion relaxes.

    ``high_prob`` is deliberately required: the direction of this curve
    is its whole story (rising, flat, or falling as ``mu`` approaches
    honest probabilities depending on whether the shortfall chance sits
    below, at, or above one half).
    """
    grid = [float(m) for m in np.asarray(mus, dtype=float)]
    outputs = [
        _binary_threshold(high_prob, RiskProfile(beta=beta, lam=lam, mu=m), quota, kappa)
        for m in grid
    ]
    return Sweep(
        "mu",
        tuple(grid),
        tuple(outputs),
        {"beta": beta, "lam": lam, "high_prob": high_prob, "quota": quota},
    )


def buying_threshold_vs_shortfall_chance(
    probs=np.linspace(0.05, 0.95, 19),
    *,
    beta: float = 0.88,
    lam: float = 2.25,
    mu: float = 1.0,
    quota: float = 2.0,
    kappa: float = DEFAULT_KAPPA,
) -> Sweep:
    """Critical buying price as the shortfall becomes more likely."""
    grid = [float(p) for p in np.asarray(probs, dtype=float)]
    outputs = [
        _binary_threshold(p, RiskProfile(beta=beta, lam=lam, mu=mu), quota, kappa)
        for p in grid
    ]
    return Sweep(
        "high_prob",
        tuple(grid),
        tuple(outputs),
        {"beta": beta, "lam": lam, "mu": mu, "quota": quota},
    )


# ---------------------------------------------------------------------
# sale-size curves
# ---------------------------------------------------------------------


def _best_sale(
    bid: float,
    profile: RiskProfile,
    instance: tuple[UserState, DemandDistribution],
    policy: ReferencePolicy,
) -> float:
    state, demand = instance
    quote = MarketQuote(min_sell_price=bid, max_buy_price=bid)
    return solve_seller_general(quote, state, demand, profile, policy).quantity


def selling_quantity_vs_loss_aversion(
    lams=np.linspace(1.0, 5.0, 17),
    *,
    bid: float = 25.0,
    beta: float = 0.88,
    mu: float = 1.0,
    policy: ReferencePolicy = ReferencePolicy.HIGH,
    instance: tuple[UserState, DemandDistribution] | None = None,
) -> Sweep:
    """Optimal sale size as losses weigh progressively heavier."""
    instance = standard_seller_instance() if instance is None else instance
    grid = [float(l) for l in np.asarray(lams, dtype=float)]
    outputs = [
        _best_sale(bid, RiskProfile(beta=beta, lam=l, mu=mu), instance, policy)
        for l in grid
    ]
    return Sweep(
        "lam",
        tuple(grid),
        tuple(outputs),
        {"bid": bid, "beta": beta, "mu": mu},
    )


def selling_quantity_vs_beta(
    betas=np.linspace(0.5, 1.0, 21),
    *,
    bid: float,
    lam: float = 2.25,
    mu: float = 1.0,
    policy: ReferencePolicy = ReferencePolicy.HIGH,
    instance: tuple[UserState, DemandDistribution] | None = None,
) -> Sweep:
    """Optimal sale size across gain curvatures at a fixed bid."""
    instance = standard_seller_instance() if instance is None else instance
    grid = [float(b) for b in np.asarray(betas, dtype=float)]
    outputs = [
        _best_sale(bid, RiskProfile(beta=b, lam=lam, mu=mu), instance, policy)
        for b in grid
    ]
    return Sweep(
        "beta",
        tuple(grid),
        tuple(outputs),
        {"bid": bid, "lam": lam, "mu": mu},
    )


def selling_quantity_vs_bid(
    bids=np.linspace(5.0, 55.0, 26),
    *,
    beta: float = 0.88,
    lam: float = 2.25,
    mu: float = 1.0,
    policy: ReferencePolicy = ReferencePolicy.HIGH,
    instance: tuple[UserState, DemandDistribution] | None = None,
) -> Sweep:
    """Optimal sale size as the quoted bid climbs toward the overage rate."""
    instance = standard_seller_instance() if instance is None else instance
    grid = [float(b) for b in np.asarray(bids, dtype=float)]
    outputs = [
        _best_sale(b, RiskProfile(beta=beta, lam=lam, mu=mu), instance, policy)
        for b in grid
    ]
    return Sweep(
        "bid",
        tuple(grid),
        tuple(outputs),
        {"beta": beta, "lam": lam, "mu": mu},
    )


def beta_trend_at_bid(
    bid: float,
    *,
    beta_lo: float = 0.5,
    beta_hi: float = 1.0,
    lam: float = 2.25,
    mu: float = 1.0,
    policy: ReferencePolicy = ReferencePolicy.HIGH,
    instance: tuple[UserState, DemandDistribution] | None = None,
) -> float:
    """Signed end-to-end change of the sale size as ``beta`` rises.

    Negative at cheap bids (curvature damps selling), positive at rich
    ones; the zero of this function in ``bid`` is the crossover.
    """
    instance = standard_seller_instance() if instance is None else instance
    lo = _best_sale(bid, RiskProfile(beta=beta_lo, lam=lam, mu=mu), instance, policy)
    hi = _best_sale(bid, RiskProfile(beta=beta_hi, lam=lam, mu=mu), instance, policy)
    return hi - lo


def find_selling_crossover_bid(
    lo: float = 5.0,
    hi: float = 55.0,
    *,
    scan_points: int = 51,
    refine_iters: int = 40,
    **trend_kwargs,
) -> float:
    """Bid price where the ``beta`` direction of the sale size flips.

    The trend difference can jump (sale sizes snap between surplus
    breakpoints), so a grid scan brackets the last falling and first
    rising bid and plain bisection tightens the bracket; the midpoint
    is returned.  Raises if the direction never flips on the scan.
    """
    grid = np.linspace(lo, hi, scan_points)
    trends = [beta_trend_at_bid(float(b), **trend_kwargs) for b in grid]
    sign = np.sign(trends)
    flips = np.nonzero((sign[:-1] < 0) & (sign[1:] > 0))[0]
    if len(flips) == 0:
        raise ValueError("beta trend never flips sign on the scanned bids")
    a, b = float(grid[flips[0]]), float(grid[flips[0] + 1])
    for _ in range(refine_iters):
        mid = 0.5 * (a + b)
        if beta_trend_at_bid(mid, **trend_kwargs) < 0:
            a = mid
        else:
            b = mid
        if b - a < 1e-6:
            break
    return 0.5 * (a + b)
