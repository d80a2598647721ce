"""
Where trading starts: critical prices and sale sizes
====================================================

A walk along the parameter axes of the two-outcome instance (plan 2 GB,
demand 1 or 3 GB) showing where the critical buying price sits and how
the preferred sale size bends.  Run it; it prints tables.
"""

import numpy as np

from quotatrader.sweeps import (
    buying_threshold_vs_beta,
    buying_threshold_vs_distortion,
    buying_threshold_vs_loss_aversion,
    buying_threshold_vs_shortfall_chance,
    beta_trend_at_bid,
    find_selling_crossover_bid,
    selling_quantity_vs_bid,
    selling_quantity_vs_loss_aversion,
)


def show(sweep, label, fmt="{:8.3f}"):
    print(f"\n{label}")
    print("  " + "  ".join(f"{g:6.3f}" for g in sweep.grid))
    print("  " + "  ".join(fmt.format(y) for y in sweep.outputs))


# ---------------------------------------------------------------
# 1. Curvature moves the buying threshold, loss aversion does not.
#
# With the no-overage day as the reference point, every buyer outcome is
# a loss: the price paid, or the overage bill.  Scaling all losses by
# lam rescales the whole objective, so the critical price ignores lam
# entirely.  Curvature beta, though, bends big losses relative to small
# ones, and the threshold climbs toward the risk-neutral break-even of
# kappa * p = 30 as beta -> 1.

beta_curve = buying_threshold_vs_beta(np.linspace(0.5, 1.0, 11))
show(beta_curve, "critical buying price vs beta   (lam=2.25, p=0.5)")

lam_curve = buying_threshold_vs_loss_aversion(np.linspace(1.0, 5.0, 9))
show(lam_curve, "critical buying price vs lam    (beta=0.88, p=0.5)")
spread = max(lam_curve.outputs) - min(lam_curve.outputs)
print(f"  -> flat to within {spread:.2e}")

# ---------------------------------------------------------------
# 2. Probability distortion cuts both ways.
#
# Prelec weighting overweights rare events and underweights likely
# ones.  So for a rare shortfall (p=0.2) more distortion (smaller mu)
# raises the willingness to pay; for a likely one (p=0.8) it lowers it;
# at an even chance the weights stay balanced and nothing moves.

for p in (0.2, 0.5, 0.8):
    mu_curve = buying_threshold_vs_distortion(np.linspace(0.5, 1.0, 6), high_prob=p)
    show(mu_curve, f"critical buying price vs mu     (shortfall chance p={p})")

p_curve = buying_threshold_vs_shortfall_chance(np.linspace(0.1, 0.9, 9))
show(p_curve, "critical buying price vs p      (beta=0.88, lam=2.25)")

# ---------------------------------------------------------------
# 3. Sale sizes: loss aversion mutes selling; the bid revives it.
#
# Selling quota re-exposes the seller to the overage they had already
# paid to avoid, and a loss-averse seller hates that trade more than
# the revenue consoles them.

sale_lam = selling_quantity_vs_loss_aversion(np.linspace(1.0, 5.0, 9))
show(sale_lam, "preferred sale (GB) vs lam      (bid 25, beta=0.88)", fmt="{:8.4f}")

sale_bid = selling_quantity_vs_bid(np.linspace(10.0, 55.0, 10))
show(sale_bid, "preferred sale (GB) vs bid      (beta=0.88, lam=2.25)", fmt="{:8.4f}")

# ---------------------------------------------------------------
# 4. The direction of the beta effect on sales flips with the bid.
#
# At stingy bids, curvature makes the small revenue feel even smaller,
# so more curvature means selling less; at generous bids the same
# curvature flattens the re-exposure risk and selling more wins.  There
# is one bid where the effect changes sign:

cross = find_selling_crossover_bid()
print(f"\nbeta-direction crossover bid: {cross:.2f}")
for bid in (cross - 8, cross + 8):
    trend = beta_trend_at_bid(bid)
    side = "sell less" if trend < 0 else "sell more"
    print(f"  at bid {bid:5.2f}: q*(beta=1.0) - q*(beta=0.5) = {trend:+.4f}  ({side} as beta rises)")
