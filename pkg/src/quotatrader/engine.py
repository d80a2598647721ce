"""Multi-day trading loop: usage records, demand prediction, the quota
ledger, and end-of-cycle profit.

The engine is deliberately myopic.  Each day it turns the user's past
months into a discrete belief over *remaining* demand, hands that belief
to the single-day optimizer, executes the resulting trade at the quoted
price, and rolls the quota forward.  Profit is settled once the cycle is
complete: net trading cash flow plus the overage bill (if any) on the
final position.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, TextIO

from .core import (
    DEFAULT_KAPPA,
    DemandDistribution,
    MarketQuote,
    ReferencePolicy,
    RiskProfile,
    UserState,
    satisfaction_loss,
    value,
    weight,
)
from .optimizer import Role, TradeDecision, decide_role

__all__ = [
    "DEFAULT_CYCLE_LENGTH",
    "UsageHistory",
    "Trade",
    "CycleLedger",
    "predict_demand",
    "update_quota",
    "daily_decision",
    "cycle_profit",
    "run_cycle",
]

DEFAULT_CYCLE_LENGTH = 30

# Slack when checking the sell cap, so a quantity produced by the solver
# as exactly the current quota is not rejected over one rounding step.
_SELL_CAP_SLACK = 1e-12


# ---------------------------------------------------------------------
# usage records
# ---------------------------------------------------------------------


def _usage_tuple(values: Iterable[float], label: str) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    if any(v < 0 for v in out):
        raise ValueError(f"{label} contains negative usage")
    return out


@dataclass(frozen=True)
class UsageHistory:
    """Per-day usage records: completed past months plus the running one.

    ``prior_months`` is ordered most recent first (``prior_months[0]`` is
    last month).  Months may have different lengths; each completed month
    carries its full day count.  ``current_month`` holds the usage of the
    cycle in progress, day 1 up to today.
    """

    prior_months: tuple[tuple[float, ...], ...] = ()
    current_month: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        months = tuple(
            _usage_tuple(m, f"prior month {i}")
            for i, m in enumerate(self.prior_months)
        )
        if any(len(m) == 0 for m in months):
            raise ValueError("completed months must have at least one day")
        object.__setattr__(self, "prior_months", months)
        object.__setattr__(
            self, "current_month", _usage_tuple(self.current_month, "current month")
        )

    @classmethod
    def from_csv(
        cls, source: str | Path | TextIO, current_month: str | None = None
    ) -> "UsageHistory":
        """Read day-level usage from CSV columns ``month, day, usage_gb``.

        Months are ordered chronologically by the ``month`` column
        (numerically when every key is an integer, lexicographically
        otherwise, which covers ISO ``YYYY-MM`` keys).  All months are
        treated as completed unless ``current_month`` names the one still
        in progress.  Days within a month must run 1..n without holes.
        """
        if isinstance(source, (str, Path)):
            with open(source, newline="") as fh:
                return cls.from_csv(fh, current_month)
        rows = list(csv.DictReader(source))
        if not rows:
            raise ValueError("usage CSV is empty")
        missing = {"month", "day", "usage_gb"} - set(rows[0])
        if missing:
            raise ValueError(f"usage CSV lacks columns: {sorted(missing)}")

        by_month: dict[str, dict[int, float]] = {}
        for row in rows:
            month = row["month"].strip()
            day = int(row["day"])
            by_month.setdefault(month, {})
            if day in by_month[month]:
                raise ValueError(f"duplicate day {day} in month {month!r}")
            by_month[month][day] = float(row["usage_gb"])

        def month_key(m: str):
            try:
                return (0, int(m), "")
            except ValueError:
                return (1, 0, m)

        ordered = sorted(by_month, key=month_key)
        if current_month is not None and current_month not in by_month:
            raise ValueError(f"current month {current_month!r} not in CSV")

        vectors: dict[str, tuple[float, ...]] = {}
        for m in ordered:
            days = sorted(by_month[m])
            if days != list(range(1, len(days) + 1)):
                raise ValueError(f"month {m!r} has missing days")
            vectors[m] = tuple(by_month[m][d] for d in days)

        current = vectors.pop(current_month) if current_month is not None else ()
        prior = tuple(
            vectors[m] for m in reversed([m for m in ordered if m in vectors])
        )
        return cls(prior, current)

    def record_usage(self, used_today: float) -> "UsageHistory":
        """New history with today's usage appended to the running month."""
        return UsageHistory(self.prior_months, self.current_month + (float(used_today),))

    def close_month(self) -> "UsageHistory":
        """Roll the running month into the completed ones."""
        if not self.current_month:
            raise ValueError("no running month to close")
        return UsageHistory((self.current_month,) + self.prior_months, ())


# ---------------------------------------------------------------------
# cycle ledger
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class Trade:
    """One executed trade: positive quantity buys, negative sells."""

    day: int
    quantity: float
    price: float

    def __post_init__(self) -> None:
        if self.day < 1:
            raise ValueError("trade days are 1-indexed")
        if self.quantity == 0.0:
            raise ValueError("zero-quantity trades are not recorded")
        if self.price <= 0:
            raise ValueError("trade price must be positive")


@dataclass
class CycleLedger:
    """Running account of one billing cycle: quota, trades, usage, profit.

    ``quota`` is the start-of-day position for the current ``day``; it is
    rolled forward by :func:`update_quota` as quota + traded - used.  The
    ledger is single-owner mutable state; ``profit`` stays ``None`` until
    the cycle completes.
    """

    initial_quota: float
    cycle_length: int = DEFAULT_CYCLE_LENGTH
    quota: float | None = None
    trades: list[Trade] = field(default_factory=list)
    usage: list[float] = field(default_factory=list)
    profit: float | None = None

    def __post_init__(self) -> None:
        if self.initial_quota <= 0:
            raise ValueError("initial quota must be positive")
        if self.cycle_length < 1:
            raise ValueError("cycle length must be at least one day")
        if self.quota is None:
            self.quota = (
                self.initial_quota
                + math.fsum(t.quantity for t in self.trades)
                - math.fsum(self.usage)
            )
        if len(self.usage) > self.cycle_length:
            raise ValueError("more usage days than the cycle holds")
        if any(u < 0 for u in self.usage):
            raise ValueError("usage must be non-negative")

    @property
    def day(self) -> int:
        """Current 1-indexed day: one past the last recorded usage."""
        return len(self.usage) + 1

    @property
    def complete(self) -> bool:
        return len(self.usage) == self.cycle_length

    # -- serialization --------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "initial_quota": self.initial_quota,
            "cycle_length": self.cycle_length,
            "quota": self.quota,
            "day": self.day,
            "trades": [
                {"day": t.day, "quantity": t.quantity, "price": t.price}
                for t in self.trades
            ],
            "usage": list(self.usage),
            "profit": self.profit,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "CycleLedger":
        ledger = cls(
            initial_quota=float(data["initial_quota"]),
            cycle_length=int(data["cycle_length"]),
            quota=float(data["quota"]),
            trades=[
                Trade(int(t["day"]), float(t["quantity"]), float(t["price"]))
                for t in data.get("trades", [])
            ],
            usage=[float(u) for u in data.get("usage", [])],
            profit=None if data.get("profit") is None else float(data["profit"]),
        )
        recomputed = (
            ledger.initial_quota
            + math.fsum(t.quantity for t in ledger.trades)
            - math.fsum(ledger.usage)
        )
        if abs(ledger.quota - recomputed) > 1e-9:
            raise ValueError("ledger quota does not match trades minus usage")
        if any(t.day > ledger.cycle_length for t in ledger.trades):
            raise ValueError("trade recorded past the end of the cycle")
        return ledger

    @classmethod
    def from_json(cls, text: str) -> "CycleLedger":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------
# prediction and quota bookkeeping
# ---------------------------------------------------------------------


def predict_demand(history: UsageHistory, day: int) -> DemandDistribution:
    """Belief over remaining demand after ``day``: one outcome per past
    month, each the sum of that month's usage on days day+1 onward, all
    equally likely.  Equal sums merge; on the last day every window is
    empty and the single outcome is zero.
    """
    if not history.prior_months:
        raise ValueError("demand prediction needs at least one completed month")
    if day < 1:
        raise ValueError("days are 1-indexed")
    sums = [math.fsum(month[day:]) for month in history.prior_months]
    return DemandDistribution.from_samples(sums)


def update_quota(
    ledger: CycleLedger,
    traded: float,
    used_today: float,
    price: float | None = None,
) -> CycleLedger:
    """Record today's trade and usage and roll the quota to tomorrow.

    ``traded`` is signed (positive buys).  Selling is capped at the
    current quota; a sale beyond it is rejected.  ``price`` is required
    whenever ``traded`` is nonzero.
    """
    if ledger.complete:
        raise ValueError("cycle is complete; no days left to record")
    if used_today < 0:
        raise ValueError("usage must be non-negative")
    if traded < 0 and -traded > ledger.quota + _SELL_CAP_SLACK:
        raise ValueError(
            f"cannot sell {-traded} GB with only {ledger.quota} GB of quota"
        )
    if traded != 0.0:
        if price is None:
            raise ValueError("a nonzero trade needs its execution price")
        ledger.trades.append(Trade(ledger.day, float(traded), float(price)))
    ledger.usage.append(float(used_today))
    ledger.quota += traded - used_today
    return ledger


# ---------------------------------------------------------------------
# daily decision
# ---------------------------------------------------------------------


def _position_utility(
    traded: float,
    price: float,
    quota: float,
    demand: DemandDistribution,
    profile: RiskProfile,
    policy: ReferencePolicy,
    kappa: float,
) -> float:
    """Prospect utility of holding ``quota + traded`` against ``demand``.

    Same formula as the optimizer objectives, but usable in degenerate
    positions (the quota may be zero or negative here, which the solver's
    problem types rule out).
    """
    d = demand.quantity_array()
    w = weight(demand.probability_array(), profile)
    if policy is ReferencePolicy.LOW:
        ref = float(satisfaction_loss(quota - demand.highest, kappa))
    else:
        ref = 0.0
    outcome = -price * traded + satisfaction_loss(quota + traded - d, kappa) - ref
    return float((w * value(outcome, profile)).sum())


def daily_decision(
    ledger: CycleLedger,
    history: UsageHistory,
    quote: MarketQuote,
    profile: RiskProfile,
    policy: ReferencePolicy | None = None,
    kappa: float = DEFAULT_KAPPA,
    used_today: float = 0.0,
) -> TradeDecision:
    """Today's recommended trade given the predicted remaining demand.

    Any positive position goes through the two-stage optimizer, whether
    or not the prediction straddles the quota: a certain surplus is sold
    down to whatever level the profile's preferences justify at the
    quoted bid, a certain shortfall is covered likewise, and on the last
    day — when the remaining-demand prediction is identically zero —
    whatever is left is riskless and gets liquidated at any positive
    bid.  Only an overage position (quota at or below zero) falls
    outside the optimizer's problem types; it is bought back whenever
    quota is cheaper on the market than as end-of-cycle overage.

    ``used_today`` is usage already consumed today but not yet recorded
    in the ledger.  Passing it makes this an end-of-day decision against
    the day's true closing position, which matters because the predicted
    demand only covers the days *after* today; deciding on the morning
    balance would leave every day's own consumption systematically
    unprovisioned.
    """
    if ledger.complete:
        raise ValueError("cycle is complete; no decision left to make")
    if used_today < 0:
        raise ValueError("usage must be non-negative")
    demand = predict_demand(history, ledger.day)
    policy = profile.reference if policy is None else policy
    quota = ledger.quota - used_today

    if quota <= 0.0:
        stay = _position_utility(0.0, 0.0, quota, demand, profile, policy, kappa)
        shortfall = demand.lowest - quota
        if shortfall > 0.0 and quote.min_sell_price < kappa:
            buy = _position_utility(
                shortfall, quote.min_sell_price, quota, demand, profile, policy, kappa
            )
            return TradeDecision(Role.BUYER, shortfall, buy)
        return TradeDecision(Role.NONE, 0.0, stay)

    state = UserState(quota=quota, kappa=kappa)
    return decide_role(quote, state, demand, profile, policy)


# ---------------------------------------------------------------------
# settlement
# ---------------------------------------------------------------------


def cycle_profit(ledger: CycleLedger, kappa: float = DEFAULT_KAPPA) -> float:
    """Cycle profit: trading cash flow plus the final overage bill.

    Buying costs money, selling earns it, and whatever shortfall remains
    at the end of the month is billed at ``kappa`` per GB (entering as a
    negative term).  Requires a complete cycle.
    """
    if not ledger.complete:
        raise ValueError("profit is settled only on a complete cycle")
    cash = math.fsum(-t.quantity * t.price for t in ledger.trades)
    return cash + float(satisfaction_loss(ledger.quota, kappa))


def run_cycle(
    initial_quota: float,
    history: UsageHistory,
    quotes: Sequence[MarketQuote],
    usage: Sequence[float],
    profile: RiskProfile,
    policy: ReferencePolicy | None = None,
    kappa: float = DEFAULT_KAPPA,
    cycle_length: int = DEFAULT_CYCLE_LENGTH,
) -> CycleLedger:
    """Run one full billing cycle and return the settled ledger.

    ``quotes`` and ``usage`` supply each day's market quote and realized
    consumption.  The caller's ``history`` is read, never mutated; only
    completed past months feed the predictions.
    """
    if len(quotes) < cycle_length or len(usage) < cycle_length:
        raise ValueError("need a quote and a usage figure for every day")
    ledger = CycleLedger(initial_quota=initial_quota, cycle_length=cycle_length)
    for day in range(1, cycle_length + 1):
        quote = quotes[day - 1]
        decision = daily_decision(
            ledger, history, quote, profile, policy, kappa, used_today=usage[day - 1]
        )
        if decision.role is Role.BUYER:
            update_quota(ledger, decision.quantity, usage[day - 1], quote.min_sell_price)
        elif decision.role is Role.SELLER:
            update_quota(ledger, -decision.quantity, usage[day - 1], quote.max_buy_price)
        else:
            update_quota(ledger, 0.0, usage[day - 1])
    ledger.profit = cycle_profit(ledger, kappa)
    return ledger
