"""Advisor HTTP service: endpoints, error codes, persistence, idempotency."""

import threading

import pytest
from fastapi.testclient import TestClient

from quotatrader.core import DemandDistribution, RiskProfile, UserState
from quotatrader.estimation import synthesize_indifference_prices
from quotatrader.service import create_app, load_quote_replay


@pytest.fixture()
def client(tmp_path):
    return TestClient(create_app(tmp_path))


def make_account(
    client,
    account_id="alice",
    initial_quota=1.0,
    prior_months=((0.7, 0.3, 0.2), (0.5, 1.2, 0.8)),
    profile=None,
    cycle_length=3,
):
    """Account whose day-1 remaining-demand prediction is {0.5, 2.0} at 50/50."""
    body = {
        "id": account_id,
        "initial_quota": initial_quota,
        "cycle_length": cycle_length,
        "prior_months": [list(m) for m in prior_months],
    }
    if profile is not None:
        body["profile"] = profile
    response = client.post("/accounts", json=body)
    assert response.status_code == 200, response.text
    return response.json()


def set_market(client, min_sell=20.0, max_buy=16.0):
    response = client.put(
        "/market", json={"min_sell_price": min_sell, "max_buy_price": max_buy}
    )
    assert response.status_code == 200, response.text
    return response.json()


def error_code(response):
    return response.json()["detail"]["code"]


# ---------------------------------------------------------------------
# market state
# ---------------------------------------------------------------------


def test_market_quote_roundtrips_and_starts_unset(client):
    response = client.get("/market")
    assert response.status_code == 404
    assert error_code(response) == "no_quote"

    set_market(client, 21.5, 17.25)
    body = client.get("/market").json()
    assert body["min_sell_price"] == 21.5
    assert body["max_buy_price"] == 17.25


def test_bad_quotes_are_rejected_with_reason_codes(client):
    crossed = client.put(
        "/market", json={"min_sell_price": 10.0, "max_buy_price": 12.0}
    )
    assert crossed.status_code == 400
    assert error_code(crossed) == "crossed_quote"

    at_overage = client.put(
        "/market", json={"min_sell_price": 60.0, "max_buy_price": 16.0}
    )
    assert at_overage.status_code == 400
    assert error_code(at_overage) == "price_out_of_range"

    missing = client.put("/market", json={"min_sell_price": 20.0})
    assert missing.status_code == 400
    assert error_code(missing) == "missing_prices"

    no_replay = client.put("/market", json={"day": 3})
    assert no_replay.status_code == 400
    assert error_code(no_replay) == "no_replay"


def test_quote_replay_selects_scheduled_days(tmp_path):
    schedule = tmp_path / "quotes.csv"
    schedule.write_text(
        "day,min_sell,max_buy\n1,20,16\n2,21,17\n3,19,15\n"
    )
    assert load_quote_replay(schedule) == {
        1: (20.0, 16.0),
        2: (21.0, 17.0),
        3: (19.0, 15.0),
    }
    client = TestClient(create_app(tmp_path / "state", quote_replay=schedule))

    chosen = client.put("/market", json={"day": 2})
    assert chosen.status_code == 200
    assert chosen.json() == {"min_sell_price": 21.0, "max_buy_price": 17.0, "day": 2}

    unknown = client.put("/market", json={"day": 9})
    assert unknown.status_code == 400
    assert error_code(unknown) == "unknown_replay_day"


# ---------------------------------------------------------------------
# account lifecycle
# ---------------------------------------------------------------------


def test_account_creation_returns_a_summary(client):
    summary = make_account(client, profile={"beta": 0.8, "lam": 2.0, "mu": 1.0})
    assert summary["id"] == "alice"
    assert summary["quota"] == 1.0
    assert summary["day"] == 1
    assert summary["profile"]["beta"] == 0.8
    assert summary["settings"]["cycle_length"] == 3

    duplicate = client.post("/accounts", json={"id": "alice", "initial_quota": 2.0})
    assert duplicate.status_code == 400
    assert error_code(duplicate) == "account_exists"


def test_unknown_accounts_404_everywhere(client):
    for method, path, body in [
        ("get", "/accounts/ghost/profile", None),
        ("put", "/accounts/ghost/profile", {"beta": 1.0, "lam": 1.0}),
        ("post", "/accounts/ghost/usage", {"used_gb": 0.5}),
        ("get", "/accounts/ghost/recommendation", None),
        ("post", "/accounts/ghost/trades", {"quantity": 1.0, "price": 20.0}),
        ("post", "/accounts/ghost/whatif", {"quantity": 0.0}),
        ("post", "/accounts/ghost/elicitation", {"buy_price": 25.0, "sell_price": 35.0}),
        ("get", "/accounts/ghost/ledger", None),
    ]:
        response = getattr(client, method)(path, **({} if body is None else {"json": body}))
        assert response.status_code == 404, (method, path, response.text)
        assert error_code(response) == "unknown_account"


def test_profile_updates_validate_risk_parameters(client):
    make_account(client)
    ok = client.put(
        "/accounts/alice/profile",
        json={"beta": 0.65, "lam": 3.0, "mu": 0.9, "reference": "low"},
    )
    assert ok.status_code == 200
    assert client.get("/accounts/alice/profile").json() == {
        "beta": 0.65,
        "lam": 3.0,
        "mu": 0.9,
        "reference": "low",
    }

    bad_beta = client.put("/accounts/alice/profile", json={"beta": 1.4, "lam": 2.0})
    assert bad_beta.status_code == 400
    assert error_code(bad_beta) == "invalid_profile"

    bad_reference = client.put(
        "/accounts/alice/profile", json={"beta": 0.8, "lam": 2.0, "reference": "mid"}
    )
    assert bad_reference.status_code == 400
    assert error_code(bad_reference) == "invalid_profile"


def test_malformed_bodies_get_a_machine_readable_400(client):
    response = client.post("/accounts", json={"cycle_length": 3})
    assert response.status_code == 400
    assert error_code(response) == "invalid_request"


# ---------------------------------------------------------------------
# recommendation
# ---------------------------------------------------------------------


def test_recommendation_covers_the_risk_neutral_shortfall(client):
    """Risk-neutral holder of 1 GB facing {0.5, 2.0} at prices (20, 16)
    is told to buy exactly the worst-case gap of 1 GB."""
    make_account(client)
    set_market(client, 20.0, 16.0)
    body = client.get("/accounts/alice/recommendation").json()
    assert body["role"] == "buy"
    assert body["quantity"] == pytest.approx(1.0, abs=1e-9)
    assert body["day"] == 1
    assert body["quote"] == {"min_sell_price": 20.0, "max_buy_price": 16.0}


def test_recommendation_is_a_pure_read(client):
    make_account(client)
    set_market(client)
    first = client.get("/accounts/alice/recommendation").json()
    second = client.get("/accounts/alice/recommendation").json()
    assert first == second
    assert client.get("/accounts/alice/ledger").json()["trades"] == []


def test_recommendation_requires_market_and_history(client, tmp_path):
    make_account(client)
    no_quote = client.get("/accounts/alice/recommendation")
    assert no_quote.status_code == 400
    assert error_code(no_quote) == "no_quote"

    set_market(client)
    client.post("/accounts", json={"id": "newcomer", "initial_quota": 1.0})
    no_history = client.get("/accounts/newcomer/recommendation")
    assert no_history.status_code == 400
    assert error_code(no_history) == "no_history"


# ---------------------------------------------------------------------
# trades and usage
# ---------------------------------------------------------------------


def test_trades_update_the_ledger_and_respect_the_quota_cap(client):
    make_account(client)
    bought = client.post(
        "/accounts/alice/trades", json={"quantity": 1.0, "price": 20.0}
    )
    assert bought.status_code == 200
    assert bought.json()["quota"] == pytest.approx(2.0)

    ledger = client.get("/accounts/alice/ledger").json()
    assert ledger["trades"] == [{"day": 1, "quantity": 1.0, "price": 20.0}]

    oversold = client.post(
        "/accounts/alice/trades", json={"quantity": -5.0, "price": 16.0}
    )
    assert oversold.status_code == 409
    assert error_code(oversold) == "over_quota"

    zero = client.post("/accounts/alice/trades", json={"quantity": 0.0, "price": 16.0})
    assert zero.status_code == 400
    assert error_code(zero) == "zero_quantity"


def test_usage_rolls_the_cycle_to_settlement(client):
    make_account(client, initial_quota=2.0, cycle_length=3)
    for used, day_after in [(0.5, 2), (1.0, 3)]:
        body = client.post("/accounts/alice/usage", json={"used_gb": used}).json()
        assert body["day"] == day_after
        assert not body["complete"]

    final = client.post("/accounts/alice/usage", json={"used_gb": 1.0}).json()
    assert final["complete"]
    assert final["quota"] == pytest.approx(-0.5)
    assert final["profit"] == pytest.approx(-30.0)  # half a GB of overage at 60

    spent = client.post("/accounts/alice/usage", json={"used_gb": 0.1})
    assert spent.status_code == 400
    assert error_code(spent) == "cycle_complete"
    done = client.get("/accounts/alice/recommendation")
    assert done.status_code == 400
    assert error_code(done) == "cycle_complete"


def test_repeated_request_ids_apply_once(client):
    make_account(client)
    trade = {"quantity": 0.5, "price": 20.0, "request_id": "trade-1"}
    first = client.post("/accounts/alice/trades", json=trade).json()
    second = client.post("/accounts/alice/trades", json=trade).json()
    assert first == second
    assert len(client.get("/accounts/alice/ledger").json()["trades"]) == 1

    usage = {"used_gb": 0.25, "request_id": "usage-1"}
    first = client.post("/accounts/alice/usage", json=usage).json()
    second = client.post("/accounts/alice/usage", json=usage).json()
    assert first == second
    assert client.get("/accounts/alice/ledger").json()["usage"] == [0.25]


def test_concurrent_usage_posts_serialize_cleanly(client):
    make_account(client, initial_quota=5.0, cycle_length=30)
    errors = []

    def record(i):
        try:
            response = client.post(
                "/accounts/alice/usage",
                json={"used_gb": 0.1, "request_id": f"day-{i}"},
            )
            assert response.status_code == 200
        except Exception as exc:  # surfaced after join
            errors.append(exc)

    threads = [threading.Thread(target=record, args=(i,)) for i in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    ledger = client.get("/accounts/alice/ledger").json()
    assert ledger["usage"] == [0.1] * 6
    assert ledger["quota"] == pytest.approx(5.0 - 0.6)


# ---------------------------------------------------------------------
# what-if
# ---------------------------------------------------------------------


def test_whatif_at_zero_quantity_is_the_no_trade_identity(client):
    make_account(client, profile={"beta": 0.8, "lam": 2.0, "mu": 0.9})
    set_market(client)
    body = client.post("/accounts/alice/whatif", json={"quantity": 0.0}).json()
    utilities = body["utilities"]
    assert utilities["buy"] == pytest.approx(utilities["none"], abs=1e-12)
    assert utilities["sell"] == pytest.approx(utilities["none"], abs=1e-12)


def test_whatif_never_mutates_and_accepts_quote_overrides(client):
    make_account(client)
    set_market(client)
    before = client.get("/accounts/alice/ledger").json()
    body = client.post(
        "/accounts/alice/whatif",
        json={"quantity": 1.0, "min_sell_price": 25.0, "max_buy_price": 10.0},
    ).json()
    assert client.get("/accounts/alice/ledger").json() == before
    utilities = body["utilities"]
    # risk-neutral holder of 1 GB facing {0.5, 2.0}: staying put costs the
    # half-probability 1 GB overage, -30 in expectation
    assert utilities["none"] == pytest.approx(-30.0, abs=1e-9)
    # buying 1 GB at 25 costs 25 and covers both outcomes
    assert utilities["buy"] == pytest.approx(-25.0, abs=1e-9)
    # selling the whole GB at 10 earns 10 and owes 0.5*(0.5 + 2.0)*60 overage
    assert utilities["sell"] == pytest.approx(-65.0, abs=1e-9)

    half_override = client.post(
        "/accounts/alice/whatif", json={"quantity": 1.0, "min_sell_price": 25.0}
    )
    assert half_override.status_code == 400
    assert error_code(half_override) == "missing_prices"


# ---------------------------------------------------------------------
# elicitation
# ---------------------------------------------------------------------


def test_elicitation_round_trip_recovers_the_stated_preferences(client):
    """Prices synthesized from (beta, lam) = (0.8, 2.0) update the stored
    profile to approximately those parameters."""
    truth = RiskProfile(beta=0.8, lam=2.0, mu=1.0)
    make_account(
        client,
        account_id="bob",
        initial_quota=2.0,
        prior_months=((0.4, 0.6, 0.4), (0.2, 1.8, 1.2)),
        profile={"beta": 1.0, "lam": 1.0, "mu": 1.0},
        cycle_length=3,
    )
    demand = DemandDistribution((1.0, 3.0), (0.5, 0.5))
    buy_price, sell_price = synthesize_indifference_prices(
        UserState(quota=2.0), demand, truth
    )
    response = client.post(
        "/accounts/bob/elicitation",
        json={"buy_price": buy_price, "sell_price": sell_price},
    )
    assert response.status_code == 200, response.text
    body = response.json()
    assert body["beta"] == pytest.approx(0.8, abs=1e-3)
    assert body["lam"] == pytest.approx(2.0, abs=1e-3)
    assert body["days_used"] == 1

    stored = client.get("/accounts/bob/profile").json()
    assert stored["beta"] == pytest.approx(0.8, abs=1e-3)
    assert stored["lam"] == pytest.approx(2.0, abs=1e-3)


def test_elicitation_rejects_prices_at_or_beyond_the_overage_rate(client):
    make_account(client)
    response = client.post(
        "/accounts/alice/elicitation", json={"buy_price": 60.0, "sell_price": 30.0}
    )
    assert response.status_code == 400
    assert error_code(response) == "price_out_of_range"


# ---------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------


def test_restart_reproduces_acknowledged_state(tmp_path):
    first = TestClient(create_app(tmp_path))
    make_account(first, profile={"beta": 0.8, "lam": 2.0})
    set_market(first, 22.0, 18.0)
    first.post("/accounts/alice/trades", json={"quantity": 0.5, "price": 22.0})
    first.post("/accounts/alice/usage", json={"used_gb": 0.3})
    ledger = first.get("/accounts/alice/ledger").json()
    profile = first.get("/accounts/alice/profile").json()

    reborn = TestClient(create_app(tmp_path))
    assert reborn.get("/accounts/alice/ledger").json() == ledger
    assert reborn.get("/accounts/alice/profile").json() == profile
    assert reborn.get("/market").json()["min_sell_price"] == 22.0
