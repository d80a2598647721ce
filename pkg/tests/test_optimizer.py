"""Solver validation against the exhaustive oracle and known structure."""

import numpy as np
import pytest

from quotatrader.core import (
    DemandDistribution,
    MarketQuote,
    ReferencePolicy,
    RiskProfile,
    UserState,
    buyer_objective,
    seller_objective,
)
from quotatrader.optimizer import (
    IntervalShape,
    Role,
    analyze_buyer_subintervals,
    analyze_seller_subintervals,
    brute_force_oracle,
    decide_role,
    solve_binary_buyer,
    solve_binary_seller,
    solve_buyer_general,
    solve_seller_general,
    threshold_prices,
)
from tests.helpers import (
    objective_is_flat_near,
    random_binary_instance,
    random_degenerate_instance,
    random_general_instance,
)

EUT = RiskProfile.expected_utility()
STATE = UserState(1.0, 60.0)
BINARY = DemandDistribution((0.5, 2.0), (0.5, 0.5))


# ------------------------------------------------------- oracle parity


@pytest.mark.parametrize("seed", [11, 12, 13])
def test_general_solvers_match_oracle(seed):
    rng = np.random.default_rng(seed)
    for _ in range(60):
        quote, state, demand, profile = random_general_instance(rng)
        for policy in ReferencePolicy:
            for role, solver, objective in (
                (Role.BUYER, solve_buyer_general, buyer_objective),
                (Role.SELLER, solve_seller_general, seller_objective),
            ):
                got = solver(quote, state, demand, profile, policy)
                ref = brute_force_oracle(role, quote, state, demand, profile, policy)
                tol = 1e-6 * (1.0 + abs(ref.utility))
                assert got.utility >= ref.utility - tol, (role, policy, got, ref)
                obj = lambda q: objective(q, quote, state, demand, profile, policy)
                if not objective_is_flat_near(obj, ref.quantity, ref.utility):
                    assert got.quantity == pytest.approx(ref.quantity, abs=2e-4)


def test_oracle_rejects_role_none():
    with pytest.raises(ValueError):
        brute_force_oracle(Role.NONE, MarketQuote(20, 16), STATE, BINARY, EUT)


# ------------------------------------------------- binary closed forms


@pytest.mark.parametrize("seed", [21, 22])
def test_binary_closed_forms_match_general_solver(seed):
    rng = np.random.default_rng(seed)
    for _ in range(100):
        quote, state, d_lo, d_hi, p, profile = random_binary_instance(rng)
        demand = DemandDistribution((d_lo, d_hi), (1 - p, p))
        for policy in ReferencePolicy:
            bb = solve_binary_buyer(quote, state, d_lo, d_hi, p, profile, policy)
            bg = solve_buyer_general(quote, state, demand, profile, policy)
            sb = solve_binary_seller(quote, state, d_lo, d_hi, p, profile, policy)
            sg = solve_seller_general(quote, state, demand, profile, policy)
            assert bb.quantity == pytest.approx(bg.quantity, abs=1e-9)
            assert sb.quantity == pytest.approx(sg.quantity, abs=1e-9)
            assert bb.utility == pytest.approx(bg.utility, rel=1e-10, abs=1e-10)
            assert sb.utility == pytest.approx(sg.utility, rel=1e-10, abs=1e-10)


def test_buyer_bang_bang_around_high_threshold():
    prof = RiskProfile(beta=0.8, lam=2.0, mu=0.9)
    th = threshold_prices(STATE, 0.5, 2.0, 0.5, prof)
    below = MarketQuote(th.buyer_pt_high - 0.5, 1.0)
    above = MarketQuote(th.buyer_pt_high + 0.5, 1.0)
    full = solve_binary_buyer(below, STATE, 0.5, 2.0, 0.5, prof, ReferencePolicy.HIGH)
    none = solve_binary_buyer(above, STATE, 0.5, 2.0, 0.5, prof, ReferencePolicy.HIGH)
    assert full.quantity == pytest.approx(1.0)
    assert none.role is Role.NONE


def test_buyer_interior_purchase_low_reference():
    # with curvature, the low-reference buyer scales the purchase down
    # continuously instead of dropping to zero past the threshold
    prof = RiskProfile(beta=0.8, lam=2.0, mu=1.0)
    th = threshold_prices(STATE, 0.5, 2.0, 0.5, prof)
    eps = 0.25
    just_below = solve_binary_buyer(
        MarketQuote(th.buyer_pt_low - eps, 1.0), STATE, 0.5, 2.0, 0.5, prof, ReferencePolicy.LOW
    )
    just_above = solve_binary_buyer(
        MarketQuote(th.buyer_pt_low + eps, 1.0), STATE, 0.5, 2.0, 0.5, prof, ReferencePolicy.LOW
    )
    way_above = solve_binary_buyer(
        MarketQuote(th.buyer_pt_low + 20.0, 1.0), STATE, 0.5, 2.0, 0.5, prof, ReferencePolicy.LOW
    )
    assert just_below.quantity == pytest.approx(1.0)
    assert 0.0 < way_above.quantity < just_above.quantity < 1.0


def test_seller_interior_sale_high_reference():
    # below the selling threshold a curved-value seller still sells a
    # strictly positive sliver, and it matches the oracle
    prof = RiskProfile(beta=0.8, lam=2.0, mu=1.0)
    th = threshold_prices(STATE, 0.5, 2.0, 0.5, prof)
    quote = MarketQuote(59.0, th.seller_pt_high - 5.0)
    got = solve_binary_seller(quote, STATE, 0.5, 2.0, 0.5, prof, ReferencePolicy.HIGH)
    ref = brute_force_oracle(Role.SELLER, quote, STATE, BINARY, prof, ReferencePolicy.HIGH)
    assert 0.0 < got.quantity < 0.5
    assert got.quantity == pytest.approx(ref.quantity, abs=2e-4)


def test_seller_low_reference_is_bang_bang():
    prof = RiskProfile(beta=0.8, lam=2.0, mu=1.0)
    th = threshold_prices(STATE, 0.5, 2.0, 0.5, prof)
    lo = solve_binary_seller(
        MarketQuote(59.0, th.seller_pt_low - 0.5), STATE, 0.5, 2.0, 0.5, prof, ReferencePolicy.LOW
    )
    hi = solve_binary_seller(
        MarketQuote(59.0, th.seller_pt_low + 0.5), STATE, 0.5, 2.0, 0.5, prof, ReferencePolicy.LOW
    )
    assert lo.role is Role.NONE
    assert hi.quantity == pytest.approx(0.5)


# ------------------------------------------------------- EUT reduction


def test_eut_thresholds_are_expected_overage_cost():
    for p in (0.1, 0.25, 0.5, 0.8, 0.95):
        th = threshold_prices(STATE, 0.5, 2.0, p, EUT)
        assert th.buyer_eut == pytest.approx(60.0 * p, abs=1e-12)
        assert th.buyer_pt_high == pytest.approx(60.0 * p, abs=1e-9)
        assert th.buyer_pt_low == pytest.approx(60.0 * p, abs=1e-9)
        assert th.seller_pt_high == pytest.approx(60.0 * p, abs=1e-9)
        assert th.seller_pt_low == pytest.approx(60.0 * p, abs=1e-9)


def test_eut_chooses_breakpoint_quantities():
    rng = np.random.default_rng(31)
    for _ in range(50):
        quote, state, demand, _ = random_general_instance(rng)
        for policy in ReferencePolicy:
            b = solve_buyer_general(quote, state, demand, EUT, policy)
            s = solve_seller_general(quote, state, demand, EUT, policy)
            b_edges = analyze_buyer_subintervals(quote, state, demand, EUT, policy).edges
            s_edges = analyze_seller_subintervals(quote, state, demand, EUT, policy).edges
            assert min(abs(b.quantity - e) for e in b_edges) < 1e-12
            assert min(abs(s.quantity - e) for e in s_edges) < 1e-12


def test_indifferent_eut_buyer_stays_out():
    # at a price exactly equal to the expected overage cost the buyer
    # is indifferent and the tie resolves to no trade
    quote = MarketQuote(30.0, 1.0)
    got = solve_buyer_general(quote, STATE, BINARY, EUT)
    assert got.role is Role.NONE
    assert got.utility == pytest.approx(-30.0)


def test_binary_tie_prices_resolve_to_zero():
    prof = RiskProfile(beta=0.8, lam=2.0, mu=0.9)
    th = threshold_prices(STATE, 0.5, 2.0, 0.5, prof)
    at_buy = solve_binary_buyer(
        MarketQuote(th.buyer_pt_high, 1.0), STATE, 0.5, 2.0, 0.5, prof, ReferencePolicy.HIGH
    )
    assert at_buy.role is Role.NONE
    at_sell = solve_binary_seller(
        MarketQuote(59.0, th.seller_pt_low), STATE, 0.5, 2.0, 0.5, prof, ReferencePolicy.LOW
    )
    assert at_sell.role is Role.NONE


# -------------------------------------------------- interval structure


def test_buyer_edges_are_shortfalls():
    an = analyze_buyer_subintervals(MarketQuote(20, 16), STATE, BINARY, EUT)
    assert an.edges == (0.0, 1.0)
    assert an.shapes == (IntervalShape.CONVEX,)


def test_seller_edges_are_surpluses_plus_kinks():
    prof = RiskProfile(beta=0.8, lam=2.0)
    quote = MarketQuote(45.0, 40.0)
    demand = DemandDistribution((0.2, 0.6, 2.0), (0.3, 0.3, 0.4))
    an = analyze_seller_subintervals(quote, STATE, demand, prof, ReferencePolicy.HIGH)
    assert 0.0 in an.edges and pytest.approx(0.8) == an.edges[-1]
    assert any(abs(e - 0.4) < 1e-12 for e in an.edges)  # quota - 0.6
    # kink of the 0.6 outcome: 60*0.4/(60-40) = 1.2 is outside the range,
    # kink of the 0.2 outcome: 60*0.8/20 = 2.4 outside as well
    assert len(an.shapes) == len(an.edges) - 1


def test_critical_point_count_is_bounded_by_outcomes():
    rng = np.random.default_rng(37)
    for _ in range(60):
        quote, state, demand, profile = random_general_instance(rng)
        for policy in ReferencePolicy:
            ab = analyze_buyer_subintervals(quote, state, demand, profile, policy)
            as_ = analyze_seller_subintervals(quote, state, demand, profile, policy)
            assert len(ab.critical_points) <= len(demand.quantities)
            assert len(as_.critical_points) <= len(demand.quantities)
            for c in ab.critical_points:
                assert 0.0 < c < ab.edges[-1]
            for c in as_.critical_points:
                assert 0.0 < c < as_.edges[-1]


def test_piece_curvature_matches_shape_tags():
    rng = np.random.default_rng(41)
    for _ in range(40):
        quote, state, demand, profile = random_general_instance(rng)
        for policy in ReferencePolicy:
            an = analyze_buyer_subintervals(quote, state, demand, profile, policy)
            for (a, b), shape in zip(zip(an.edges[:-1], an.edges[1:]), an.shapes):
                if b - a < 1e-6:
                    continue
                qs = np.linspace(a + 1e-9, b - 1e-9, 9)
                us = buyer_objective(qs, quote, state, demand, profile, policy)
                dd = np.diff(us, 2)
                if shape is IntervalShape.CONVEX:
                    assert np.all(dd >= -1e-7 * (1.0 + np.abs(us[1:-1])))
                elif shape is IntervalShape.CONCAVE:
                    assert np.all(dd <= 1e-7 * (1.0 + np.abs(us[1:-1])))


def test_objectives_decrease_beyond_last_edge():
    rng = np.random.default_rng(43)
    for _ in range(30):
        quote, state, demand, profile = random_general_instance(rng)
        for policy in ReferencePolicy:
            top_b = demand.highest - state.quota
            qs = top_b + np.array([0.0, 0.3, 1.0, 2.5])
            us = buyer_objective(qs, quote, state, demand, profile, policy)
            assert np.all(np.diff(us) < 0)
            top_s = state.quota - demand.lowest
            qs = top_s + np.array([0.0, 0.3, 1.0, 2.5])
            us = seller_objective(qs, quote, state, demand, profile, policy)
            assert np.all(np.diff(us) < 0)


# ------------------------------------------------------- role decision


def test_decide_role_prefers_better_side():
    cheap = MarketQuote(20.0, 16.0)
    decision = decide_role(cheap, STATE, BINARY, EUT)
    assert decision.role is Role.BUYER
    assert decision.quantity == pytest.approx(1.0)

    rich = MarketQuote(45.0, 40.0)
    decision = decide_role(rich, STATE, BINARY, EUT)
    assert decision.role is Role.SELLER
    assert decision.quantity == pytest.approx(0.5)


def test_decide_role_none_when_neither_trade_helps():
    mid = MarketQuote(35.0, 25.0)
    decision = decide_role(mid, STATE, BINARY, EUT)
    assert decision.role is Role.NONE
    assert decision.quantity == 0.0
    assert decision.utility == pytest.approx(-30.0)


def test_decide_role_utility_dominates_both_sides():
    rng = np.random.default_rng(53)
    for _ in range(40):
        quote, state, demand, profile = random_general_instance(rng)
        chosen = decide_role(quote, state, demand, profile)
        b = solve_buyer_general(quote, state, demand, profile)
        s = solve_seller_general(quote, state, demand, profile)
        assert chosen.utility == pytest.approx(max(b.utility, s.utility), rel=1e-12)


# ------------------------------------------------ one-sided positions


@pytest.mark.parametrize("side", ["surplus", "shortfall"])
def test_solvers_match_oracle_on_one_sided_positions(side):
    rng = np.random.default_rng(71 if side == "surplus" else 72)
    for _ in range(60):
        quote, state, demand, profile = random_degenerate_instance(rng, side)
        for policy in ReferencePolicy:
            for role, solver, objective in (
                (Role.BUYER, solve_buyer_general, buyer_objective),
                (Role.SELLER, solve_seller_general, seller_objective),
            ):
                got = solver(quote, state, demand, profile, policy)
                ref = brute_force_oracle(role, quote, state, demand, profile, policy)
                tol = 1e-6 * (1.0 + abs(ref.utility))
                assert got.utility >= ref.utility - tol, (role, policy, got, ref)
                obj = lambda q: objective(q, quote, state, demand, profile, policy)
                if not objective_is_flat_near(obj, ref.quantity, ref.utility):
                    assert got.quantity == pytest.approx(ref.quantity, abs=2e-4)


def test_fully_covered_position_never_buys():
    rng = np.random.default_rng(73)
    for _ in range(40):
        quote, state, demand, profile = random_degenerate_instance(rng, "surplus")
        assert solve_buyer_general(quote, state, demand, profile).role is Role.NONE


def test_certain_shortfall_never_sells():
    rng = np.random.default_rng(74)
    for _ in range(40):
        quote, state, demand, profile = random_degenerate_instance(rng, "shortfall")
        assert solve_seller_general(quote, state, demand, profile).role is Role.NONE


def test_riskless_surplus_sale_at_a_low_bid():
    # With the bid below every repositioning threshold, the seller parts
    # only with the slab no predicted outcome can need.
    demand = DemandDistribution((0.5, 1.0, 1.5), (0.4, 0.4, 0.2))
    state = UserState(2.0, 60.0)
    got = solve_seller_general(MarketQuote(6.0, 5.0), state, demand, EUT)
    assert got.role is Role.SELLER
    assert got.quantity == pytest.approx(0.5)


def test_deep_surplus_sale_at_a_rich_bid():
    # A bid above kappa times the top outcome's probability (here 12)
    # makes exposing that outcome to overage worthwhile, so the sale
    # runs down to the next outcome instead of stopping at the slab.
    demand = DemandDistribution((0.5, 1.0, 1.5), (0.4, 0.4, 0.2))
    state = UserState(2.0, 60.0)
    got = solve_seller_general(MarketQuote(30.0, 25.0), state, demand, EUT)
    assert got.role is Role.SELLER
    assert got.quantity == pytest.approx(1.0)


# ----------------------------------------------------------- rejection


def test_solvers_reject_prices_at_overage_rate():
    with pytest.raises(ValueError):
        solve_buyer_general(MarketQuote(60.0, 16.0), STATE, BINARY, EUT)
    with pytest.raises(ValueError):
        decide_role(MarketQuote(62.0, 61.0), STATE, BINARY, EUT)


def test_threshold_inputs_validated():
    with pytest.raises(ValueError):
        threshold_prices(STATE, 1.5, 2.0, 0.5, EUT)  # low side above quota
    with pytest.raises(ValueError):
        threshold_prices(STATE, 0.5, 2.0, 0.0, EUT)
