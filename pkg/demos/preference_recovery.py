"""
Asking two questions a day recovers a user's risk parameters
============================================================

Each day the user faces a known quota and a belief about the rest of
the month, and states two prices: the most they would pay to cover the
worst case, and the least they would accept to sell their whole
surplus.  Those two indifference points pin down the value-function
curvature beta and the loss multiplier lam for that day; averaging
over the month smooths the answers out.

Here the "user" is synthetic, so we know the truth and can watch the
estimate converge -- first from exact answers, then from answers
jittered the way a survey would be.
"""

import numpy as np

from quotatrader.core import DemandDistribution, RiskProfile, UserState
from quotatrader.estimation import (
    IndifferenceReport,
    estimate_over_cycle,
    synthesize_indifference_prices,
)

truth = RiskProfile(beta=0.8, lam=2.0, mu=1.0)
rng = np.random.default_rng(11)

# ---------------------------------------------------------------
# A month of elicitation days: the quota melts as the month goes on,
# the demand outlook hugs it from both sides.

reports = []
for day in range(1, 31):
    quota = 2.0 * (31 - day) / 30.0
    demand = DemandDistribution(
        (0.45 * quota, 1.3 * quota, 2.1 * quota), (0.3, 0.4, 0.3)
    )
    buy, sell = synthesize_indifference_prices(
        UserState(quota=quota), demand, truth
    )
    reports.append(
        IndifferenceReport(
            day_index=day,
            quota_at_day=quota,
            demand_snapshot=demand,
            buy_price=buy,
            sell_price=sell,
        )
    )

exact = estimate_over_cycle(reports, mu=truth.mu)
print(f"truth            beta={truth.beta:.3f}  lam={truth.lam:.3f}")
print(
    f"exact answers    beta={exact.beta:.4f}  lam={exact.lam:.4f}  "
    f"({exact.days_used} days used)"
)

# ---------------------------------------------------------------
# Real users round, hesitate, and anchor.  Jitter every stated price by
# up to the given fraction and re-estimate; the average over 30 noisy
# days stays close to the truth long after any single day has drifted.

for noise in (0.01, 0.05):
    jittered = [
        IndifferenceReport(
            day_index=r.day_index,
            quota_at_day=r.quota_at_day,
            demand_snapshot=r.demand_snapshot,
            buy_price=min(r.buy_price * (1 + rng.uniform(-noise, noise)), 59.99),
            sell_price=min(r.sell_price * (1 + rng.uniform(-noise, noise)), 59.99),
        )
        for r in reports
    ]
    noisy = estimate_over_cycle(jittered, mu=truth.mu)
    kept = noisy.days_used
    print(
        f"+/-{noise:.0%} jitter    beta={noisy.beta:.4f}  lam={noisy.lam:.4f}  "
        f"({kept} days used, {30 - kept} skipped)"
    )

# ---------------------------------------------------------------
# The per-day scatter shows why the averaging matters.

per_day_beta = [b for _, b, _ in exact.per_day]
print(
    f"\nper-day beta from exact answers: "
    f"min {min(per_day_beta):.4f}, max {max(per_day_beta):.4f} "
    f"(all equal: a clean answer pins the day exactly)"
)
