"""Shared random-instance generators for solver validation."""

import numpy as np

from quotatrader.core import (
    DemandDistribution,
    MarketQuote,
    RiskProfile,
    UserState,
)

KAPPA = 60.0


def random_profile(rng) -> RiskProfile:
    return RiskProfile(
        beta=float(rng.uniform(0.5, 1.0)),
        lam=float(rng.uniform(1.0, 5.0)),
        mu=float(rng.uniform(0.5, 1.0)),
    )


def random_quote(rng) -> MarketQuote:
    min_sell = float(rng.uniform(2.0, KAPPA - 1.0))
    max_buy = float(rng.uniform(1.0, min_sell))
    return MarketQuote(min_sell_price=min_sell, max_buy_price=max_buy)


def random_general_instance(rng, i_min: int = 2, i_max: int = 10):
    """A demand belief straddling the quota, with separated outcomes.

    Returns (quote, state, demand, profile).  Outcomes are kept at
    least 1e-3 GB apart so breakpoints never collide numerically.
    """
    while True:
        outcomes = int(rng.integers(i_min, i_max + 1))
        below = int(rng.integers(1, outcomes))
        quota = float(rng.uniform(1.0, 3.0))
        lows = np.sort(rng.uniform(0.05 * quota, 0.995 * quota, below))
        highs = np.sort(rng.uniform(1.005 * quota, 3.0 * quota, outcomes - below))
        ds = np.concatenate([lows, highs])
        if np.any(np.diff(ds) < 1e-3):
            continue
        probs = rng.dirichlet(np.ones(outcomes))
        probs = np.maximum(probs, 0.01)
        probs /= probs.sum()
        demand = DemandDistribution(tuple(float(d) for d in ds), tuple(float(p) for p in probs))
        return random_quote(rng), UserState(quota, KAPPA), demand, random_profile(rng)


def random_degenerate_instance(rng, side: str, i_min: int = 1, i_max: int = 8):
    """A demand belief entirely on one side of the quota.

    ``side`` is "surplus" (every outcome strictly below the quota) or
    "shortfall" (every outcome strictly above it).
    """
    while True:
        outcomes = int(rng.integers(i_min, i_max + 1))
        quota = float(rng.uniform(1.0, 3.0))
        if side == "surplus":
            ds = np.sort(rng.uniform(0.0, 0.995 * quota, outcomes))
        elif side == "shortfall":
            ds = np.sort(rng.uniform(1.005 * quota, 3.0 * quota, outcomes))
        else:
            raise ValueError(f"unknown side {side!r}")
        if outcomes > 1 and np.any(np.diff(ds) < 1e-3):
            continue
        probs = rng.dirichlet(np.ones(outcomes))
        probs = np.maximum(probs, 0.01)
        probs /= probs.sum()
        demand = DemandDistribution(tuple(float(d) for d in ds), tuple(float(p) for p in probs))
        return random_quote(rng), UserState(quota, KAPPA), demand, random_profile(rng)


def random_binary_instance(rng):
    """Returns (quote, state, d_low, d_high, high_prob, profile)."""
    quota = float(rng.uniform(1.0, 3.0))
    d_low = float(rng.uniform(0.05 * quota, 0.98 * quota))
    d_high = float(rng.uniform(1.02 * quota, 3.0 * quota))
    p = float(rng.uniform(0.05, 0.95))
    return random_quote(rng), UserState(quota, KAPPA), d_low, d_high, p, random_profile(rng)


def objective_is_flat_near(objective, q: float, utility: float, span: float = 1e-3) -> bool:
    """True when the objective barely moves within ``span`` of ``q``,
    so the maximiser's location is not numerically meaningful."""
    lo = max(q - span, 0.0)
    probe = max(abs(float(objective(lo)) - utility), abs(float(objective(q + span)) - utility))
    return probe < 1e-9 * (1.0 + abs(utility))
