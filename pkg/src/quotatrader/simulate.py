"""Monte Carlo market simulation: random price walks, random monthly
demand, and strategy benchmarks over many independent billing cycles.

All randomness for one replica flows from a single seeded generator in a
fixed draw order (past months, this month's total, then the price path),
so different strategies and risk profiles face *identical* markets for
the same seed — comparisons are paired, not merely distributional.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import DEFAULT_KAPPA, MarketQuote, ReferencePolicy, RiskProfile
from .engine import (
    DEFAULT_CYCLE_LENGTH,
    CycleLedger,
    UsageHistory,
    cycle_profit,
    run_cycle,
    update_quota,
)

__all__ = [
    "PriceProcess",
    "DemandKind",
    "DemandModel",
    "Strategy",
    "ProfitStats",
    "spread_evenly",
    "simulate_cycle",
    "monte_carlo",
]


# ---------------------------------------------------------------------
# market primitives
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class PriceProcess:
    """Day-to-day quote evolution: ±1 steps with probability ``p_c`` each.

    In coupled mode (the default) a single walk starting at
    ``initial_min_sell`` serves as both quotes, matching a market where
    the posted buying and selling prices coincide.  Otherwise the two
    quotes walk independently from their own starting points, with the
    buying quote clamped down to the selling quote whenever the walks
    would cross.  Prices never drop below ``floor``.
    """

    p_c: float = 0.1
    initial_min_sell: float = 20.0
    initial_max_buy: float = 16.0
    coupled: bool = True
    floor: float = 1.0
    step: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_c <= 0.5:
            raise ValueError("step probability must lie in [0, 0.5]")
        if self.floor <= 0 or self.step <= 0:
            raise ValueError("floor and step size must be positive")
        if self.initial_min_sell < self.floor or self.initial_max_buy < self.floor:
            raise ValueError("initial prices must respect the floor")
        if self.initial_max_buy > self.initial_min_sell:
            raise ValueError("initial quotes must not cross")

    def _steps(self, rng: np.random.Generator, days: int) -> np.ndarray:
        u = rng.random(days)
        return self.step * ((u < self.p_c).astype(float) - (u >= 1.0 - self.p_c))

    def sample_quotes(self, rng: np.random.Generator, days: int) -> list[MarketQuote]:
        """Quote path for one cycle; day 1 shows the initial prices."""
        if self.coupled:
            moves = self._steps(rng, days - 1)
            mid = self.initial_min_sell
            sell = [mid]
            for m in moves:
                mid = float(max(self.floor, mid + m))
                sell.append(mid)
            return [MarketQuote(min_sell_price=s, max_buy_price=s) for s in sell]
        sell_moves = self._steps(rng, days - 1)
        buy_moves = self._steps(rng, days - 1)
        sell, buy = self.initial_min_sell, self.initial_max_buy
        quotes = [MarketQuote(min_sell_price=sell, max_buy_price=buy)]
        for ds, db in zip(sell_moves, buy_moves):
            sell = float(max(self.floor, sell + ds))
            buy = float(min(max(self.floor, buy + db), sell))
            quotes.append(MarketQuote(min_sell_price=sell, max_buy_price=buy))
        return quotes


class DemandKind(enum.Enum):
    UNIFORM = "uniform"
    NORMAL = "normal"


@dataclass(frozen=True)
class DemandModel:
    """Distribution of a month's total demand, truncated at zero.

    The uniform variant spans ``mean ± half_width``; the normal variant
    uses ``std``.  Totals are drawn per month and then allocated across
    the days of the cycle.
    """

    kind: DemandKind = DemandKind.UNIFORM
    mean: float = 2.0
    std: float = 1.0 / 3.0
    half_width: float = 1.0

    def __post_init__(self) -> None:
        if self.mean <= 0:
            raise ValueError("mean monthly demand must be positive")
        if self.std <= 0 or self.half_width <= 0:
            raise ValueError("demand spread parameters must be positive")

    def sample_totals(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if self.kind is DemandKind.UNIFORM:
            lo = max(0.0, self.mean - self.half_width)
            hi = self.mean + self.half_width
            return rng.uniform(lo, hi, size=count)
        return np.maximum(0.0, rng.normal(self.mean, self.std, size=count))


def spread_evenly(total: float, days: int) -> tuple[float, ...]:
    """Constant daily usage summing to the month's total."""
    return (total / days,) * days


class Strategy(enum.Enum):
    ADVISOR = "advisor"
    TRADE_WITH_CERTAINTY = "trade-with-certainty"
    NO_TRADING = "no-trading"


# ---------------------------------------------------------------------
# one replica
# ---------------------------------------------------------------------


def _certainty_cycle(
    initial_quota: float,
    quotes: list[MarketQuote],
    usage: tuple[float, ...],
    kappa: float,
    cycle_length: int,
) -> CycleLedger:
    """Trade once on the last day, when the month's usage is certain."""
    ledger = CycleLedger(initial_quota=initial_quota, cycle_length=cycle_length)
    gap = math.fsum(usage) - initial_quota
    for day in range(1, cycle_length + 1):
        if day < cycle_length or gap == 0.0:
            update_quota(ledger, 0.0, usage[day - 1])
        elif gap > 0:
            update_quota(ledger, gap, usage[day - 1], quotes[day - 1].min_sell_price)
        else:
            update_quota(ledger, gap, usage[day - 1], quotes[day - 1].max_buy_price)
    ledger.profit = cycle_profit(ledger, kappa)
    return ledger


def _no_trading_cycle(
    initial_quota: float,
    usage: tuple[float, ...],
    kappa: float,
    cycle_length: int,
) -> CycleLedger:
    ledger = CycleLedger(initial_quota=initial_quota, cycle_length=cycle_length)
    for day in range(1, cycle_length + 1):
        update_quota(ledger, 0.0, usage[day - 1])
    ledger.profit = cycle_profit(ledger, kappa)
    return ledger


def simulate_cycle(
    seed,
    strategy: Strategy,
    profile: RiskProfile,
    price_process: PriceProcess | None = None,
    demand_model: DemandModel | None = None,
    policy: ReferencePolicy | None = None,
    initial_quota: float = 2.0,
    kappa: float = DEFAULT_KAPPA,
    cycle_length: int = DEFAULT_CYCLE_LENGTH,
    prior_months: int = 3,
    allocator=spread_evenly,
) -> CycleLedger:
    """Run one seeded billing cycle under a strategy and return the
    settled ledger.  The same seed always produces the same market, no
    matter the strategy or profile."""
    price_process = PriceProcess() if price_process is None else price_process
    demand_model = DemandModel() if demand_model is None else demand_model
    if prior_months < 1:
        raise ValueError("the simulator needs at least one past month")

    rng = np.random.default_rng(seed)
    past_totals = demand_model.sample_totals(rng, prior_months)
    this_total = float(demand_model.sample_totals(rng, 1)[0])
    quotes = price_process.sample_quotes(rng, cycle_length)

    history = UsageHistory(
        prior_months=tuple(allocator(float(t), cycle_length) for t in past_totals)
    )
    usage = allocator(this_total, cycle_length)

    if strategy is Strategy.ADVISOR:
        return run_cycle(
            initial_quota, history, quotes, usage, profile, policy, kappa, cycle_length
        )
    if strategy is Strategy.TRADE_WITH_CERTAINTY:
        return _certainty_cycle(initial_quota, quotes, usage, kappa, cycle_length)
    return _no_trading_cycle(initial_quota, usage, kappa, cycle_length)


# ---------------------------------------------------------------------
# replica aggregation
# ---------------------------------------------------------------------

_PERCENTILES = (5, 25, 50, 75, 95)


@dataclass(frozen=True)
class ProfitStats:
    """Cycle-profit distribution over independent replicas."""

    mean: float
    minimum: float
    maximum: float
    percentiles: dict[int, float]
    replicas: int
    profits: tuple[float, ...] = field(repr=False)

    def __post_init__(self) -> None:
        if not self.minimum <= self.mean <= self.maximum:
            raise ValueError("profit statistics are inconsistent")

    @classmethod
    def from_profits(cls, profits) -> "ProfitStats":
        arr = np.asarray(list(profits), dtype=float)
        if arr.size == 0:
            raise ValueError("need at least one replica")
        return cls(
            mean=float(arr.mean()),
            minimum=float(arr.min()),
            maximum=float(arr.max()),
            percentiles={p: float(np.percentile(arr, p)) for p in _PERCENTILES},
            replicas=int(arr.size),
            profits=tuple(float(x) for x in arr),
        )

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "min": self.minimum,
            "max": self.maximum,
            "percentiles": {str(k): v for k, v in self.percentiles.items()},
            "replicas": self.replicas,
        }


def monte_carlo(
    replicas: int,
    strategy: Strategy,
    profile: RiskProfile,
    price_process: PriceProcess | None = None,
    demand_model: DemandModel | None = None,
    base_seed: int = 0,
    **cycle_kwargs,
) -> ProfitStats:
    """Profit statistics over ``replicas`` independent seeded cycles.

    Replica ``i`` uses the seed pair ``(base_seed, i)``, so repeated runs
    (and runs of rival strategies under the same base seed) reproduce and
    face the same market paths.
    """
    if replicas < 1:
        raise ValueError("need at least one replica")
    profits = []
    for i in range(replicas):
        ledger = simulate_cycle(
            (base_seed, i), strategy, profile, price_process, demand_model,
            **cycle_kwargs,
        )
        profits.append(ledger.profit)
    return ProfitStats.from_profits(profits)
