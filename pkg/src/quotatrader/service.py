"""HTTP advisor service: accounts, market quotes, recommendations.

A small JSON-over-HTTP front end for the decision engine, sized for a
single operator and a handful of accounts.  Each account lives in one
JSON document under the storage directory; every mutation rewrites the
document atomically (temp file then rename), so a restart reproduces
the last acknowledged state.  Requests touching one account are
serialized behind that account's lock; distinct accounts never contend.

Market state is operator-supplied through ``PUT /market`` with explicit
prices.  When the app is built with a quote-replay file (CSV columns
``day, min_sell, max_buy``) the operator can instead select a quoted
day: ``PUT /market {"day": 7}`` loads row 7 from the file.  Quoted
prices must stay below the overage rate; trading at or above it can
never beat simply paying the bill, so such quotes are configuration
errors, not market states.

Errors carry machine-readable codes in the ``detail`` payload, e.g.
``{"detail": {"code": "over_quota", "message": ...}}`` — 400 for
violated preconditions, 404 for unknown accounts, 409 for sales that
would overdraw the quota.  Mutating endpoints accept an optional client
``request_id``; repeating a request id returns the originally
acknowledged body without applying the mutation twice.
"""

from __future__ import annotations

import csv
import json
import os
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .core import (
    DEFAULT_KAPPA,
    DemandDistribution,
    MarketQuote,
    ReferencePolicy,
    RiskProfile,
)
from .engine import (
    CycleLedger,
    Trade,
    UsageHistory,
    _position_utility,
    cycle_profit,
    daily_decision,
    predict_demand,
)
from .estimation import EstimationError, IndifferenceReport, estimate_over_cycle
from .optimizer import Role

__all__ = ["create_app", "load_quote_replay"]

_ROLE_WIRE = {Role.BUYER: "buy", Role.SELLER: "sell", Role.NONE: "none"}
_SELL_CAP_SLACK = 1e-9


# ---------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------


class DocumentStore:
    """One pretty-printed JSON file per key, replaced atomically."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def load(self, key: str) -> dict | None:
        path = self.path(key)
        if not path.exists():
            return None
        return json.loads(path.read_text())

    def save(self, key: str, document: dict) -> None:
        path = self.path(key)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(json.dumps(document, indent=2))
        os.replace(tmp, path)


class LockRegistry:
    """Named locks, created on first use."""

    def __init__(self):
        self._guard = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}

    def lock(self, key: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(key, threading.Lock())


def load_quote_replay(path: str | Path) -> dict[int, tuple[float, float]]:
    """Read a quote schedule from CSV columns ``day, min_sell, max_buy``."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError("quote replay CSV is empty")
    missing = {"day", "min_sell", "max_buy"} - set(rows[0])
    if missing:
        raise ValueError(f"quote replay CSV lacks columns: {sorted(missing)}")
    schedule: dict[int, tuple[float, float]] = {}
    for row in rows:
        day = int(row["day"])
        if day in schedule:
            raise ValueError(f"duplicate day {day} in quote replay CSV")
        schedule[day] = (float(row["min_sell"]), float(row["max_buy"]))
    return schedule


# ---------------------------------------------------------------------
# request bodies
# ---------------------------------------------------------------------


class ProfileBody(BaseModel):
    beta: float
    lam: float
    mu: float = 1.0
    reference: str = "high"


class AccountBody(BaseModel):
    id: str | None = None
    initial_quota: float
    cycle_length: int = 30
    profile: ProfileBody | None = None
    prior_months: list[list[float]] = []
    notify_every_days: int = 1


class QuoteBody(BaseModel):
    min_sell_price: float | None = None
    max_buy_price: float | None = None
    day: int | None = None


class UsageBody(BaseModel):
    used_gb: float
    request_id: str | None = None


class TradeBody(BaseModel):
    quantity: float
    price: float
    request_id: str | None = None


class WhatIfBody(BaseModel):
    quantity: float
    min_sell_price: float | None = None
    max_buy_price: float | None = None
    used_today: float = 0.0


class ElicitationBody(BaseModel):
    buy_price: float
    sell_price: float
    request_id: str | None = None


# ---------------------------------------------------------------------
# document <-> domain views
# ---------------------------------------------------------------------


def _fail(status: int, code: str, message: str) -> None:
    raise HTTPException(status, {"code": code, "message": message})


def _profile_from_doc(doc: dict) -> RiskProfile:
    p = doc["profile"]
    return RiskProfile(
        beta=p["beta"],
        lam=p["lam"],
        mu=p["mu"],
        reference=ReferencePolicy(p["reference"]),
    )


def _profile_from_body(body: ProfileBody) -> RiskProfile:
    try:
        reference = ReferencePolicy(body.reference)
    except ValueError:
        _fail(400, "invalid_profile", f"unknown reference policy {body.reference!r}")
    try:
        return RiskProfile(body.beta, body.lam, body.mu, reference)
    except ValueError as exc:
        _fail(400, "invalid_profile", str(exc))


def _profile_to_doc(profile: RiskProfile) -> dict:
    return {
        "beta": profile.beta,
        "lam": profile.lam,
        "mu": profile.mu,
        "reference": profile.reference.value,
    }


def _history_from_doc(doc: dict) -> UsageHistory:
    h = doc["history"]
    return UsageHistory(
        prior_months=tuple(tuple(m) for m in h["prior_months"]),
        current_month=tuple(h["current_month"]),
    )


def _report_from_dict(r: dict) -> IndifferenceReport:
    return IndifferenceReport(
        day_index=r["day_index"],
        quota_at_day=r["quota_at_day"],
        demand_snapshot=DemandDistribution(
            tuple(r["demand"]["quantities"]),
            tuple(r["demand"]["probabilities"]),
        ),
        buy_price=r["buy_price"],
        sell_price=r["sell_price"],
    )


def _account_summary(doc: dict) -> dict:
    ledger = doc["ledger"]
    return {
        "id": doc["id"],
        "profile": doc["profile"],
        "settings": doc["settings"],
        "quota": ledger["quota"],
        "day": ledger["day"],
        "cycle_length": ledger["cycle_length"],
        "complete": len(ledger["usage"]) == ledger["cycle_length"],
    }


def _replayed_response(doc: dict, request_id: str | None) -> dict | None:
    if request_id is None:
        return None
    return doc.get("processed_requests", {}).get(request_id)


def _remember_response(doc: dict, request_id: str | None, body: dict) -> None:
    if request_id is not None:
        doc.setdefault("processed_requests", {})[request_id] = body


# ---------------------------------------------------------------------
# application factory
# ---------------------------------------------------------------------


def create_app(
    storage_dir: str | Path,
    quote_replay: str | Path | None = None,
    kappa: float = DEFAULT_KAPPA,
) -> FastAPI:
    """Build the advisor app over a storage directory.

    ``quote_replay`` optionally names a CSV quote schedule (see
    :func:`load_quote_replay`); when given, the first scheduled day
    seeds the market state if none is stored yet.
    """
    storage = Path(storage_dir)
    accounts = DocumentStore(storage / "accounts")
    market = DocumentStore(storage)
    locks = LockRegistry()
    replay = None if quote_replay is None else load_quote_replay(quote_replay)

    app = FastAPI(title="quota trading advisor")
    # the browser front end is a static page served from another origin
    # (or a local file), so cross-origin requests are the normal case
    # (desk-scale service, no credentials to protect)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def _on_invalid_body(request, exc):
        first = exc.errors()[0] if exc.errors() else {}
        where = ".".join(str(piece) for piece in first.get("loc", ()))
        message = f"{where}: {first.get('msg', 'invalid request')}"
        return JSONResponse(
            status_code=400,
            content={"detail": {"code": "invalid_request", "message": message}},
        )

    # -- shared helpers -------------------------------------------------

    def load_account(account_id: str) -> dict:
        doc = accounts.load(account_id)
        if doc is None:
            _fail(404, "unknown_account", f"no account {account_id!r}")
        return doc

    def ledger_of(doc: dict) -> CycleLedger:
        return CycleLedger.from_dict(doc["ledger"])

    def check_price(price: float) -> None:
        if not 0.0 < price < kappa:
            _fail(
                400,
                "price_out_of_range",
                f"prices must lie strictly between 0 and the overage rate {kappa}",
            )

    def current_quote() -> MarketQuote:
        doc = market.load("market")
        if doc is None:
            _fail(400, "no_quote", "no market quote has been set")
        return MarketQuote(doc["min_sell_price"], doc["max_buy_price"])

    def demand_for(doc: dict, ledger: CycleLedger) -> DemandDistribution:
        history = _history_from_doc(doc)
        if not history.prior_months:
            _fail(
                400,
                "no_history",
                "demand prediction needs at least one completed month of usage",
            )
        return predict_demand(history, ledger.day)

    # -- market ----------------------------------------------------------

    @app.get("/market")
    def get_market():
        doc = market.load("market")
        if doc is None:
            _fail(404, "no_quote", "no market quote has been set")
        return doc

    @app.put("/market")
    def put_market(body: QuoteBody):
        with locks.lock("market"):
            if body.day is not None:
                if replay is None:
                    _fail(400, "no_replay", "service was built without a quote replay file")
                if body.day not in replay:
                    _fail(400, "unknown_replay_day", f"replay file has no day {body.day}")
                min_sell, max_buy = replay[body.day]
                day = body.day
            else:
                if body.min_sell_price is None or body.max_buy_price is None:
                    _fail(
                        400,
                        "missing_prices",
                        "provide min_sell_price and max_buy_price, or a replay day",
                    )
                min_sell, max_buy = body.min_sell_price, body.max_buy_price
                day = None
            check_price(min_sell)
            check_price(max_buy)
            try:
                MarketQuote(min_sell, max_buy)
            except ValueError as exc:
                _fail(400, "crossed_quote", str(exc))
            doc = {"min_sell_price": min_sell, "max_buy_price": max_buy, "day": day}
            market.save("market", doc)
            return doc

    # -- accounts ----------------------------------------------------------

    @app.post("/accounts")
    def post_account(body: AccountBody):
        account_id = body.id if body.id else uuid.uuid4().hex
        profile_body = body.profile or ProfileBody(beta=1.0, lam=1.0, mu=1.0)
        profile = _profile_from_body(profile_body)
        with locks.lock(account_id):
            if accounts.load(account_id) is not None:
                _fail(400, "account_exists", f"account {account_id!r} already exists")
            try:
                months = tuple(tuple(float(v) for v in m) for m in body.prior_months)
                history = UsageHistory(prior_months=months)
                ledger = CycleLedger(
                    initial_quota=body.initial_quota, cycle_length=body.cycle_length
                )
            except ValueError as exc:
                _fail(400, "invalid_account", str(exc))
            if body.notify_every_days < 1:
                _fail(400, "invalid_account", "notify_every_days must be at least 1")
            doc = {
                "id": account_id,
                "profile": _profile_to_doc(profile),
                "settings": {
                    "cycle_length": body.cycle_length,
                    "notify_every_days": body.notify_every_days,
                },
                "history": {
                    "prior_months": [list(m) for m in history.prior_months],
                    "current_month": [],
                },
                "ledger": ledger.to_dict(),
                "reports": [],
                "processed_requests": {},
            }
            accounts.save(account_id, doc)
            return _account_summary(doc)

    @app.get("/accounts/{account_id}/profile")
    def get_profile(account_id: str):
        return load_account(account_id)["profile"]

    @app.put("/accounts/{account_id}/profile")
    def put_profile(account_id: str, body: ProfileBody):
        profile = _profile_from_body(body)
        with locks.lock(account_id):
            doc = load_account(account_id)
            doc["profile"] = _profile_to_doc(profile)
            accounts.save(account_id, doc)
            return doc["profile"]

    # -- daily flow ----------------------------------------------------------

    @app.post("/accounts/{account_id}/usage")
    def post_usage(account_id: str, body: UsageBody):
        with locks.lock(account_id):
            doc = load_account(account_id)
            replayed = _replayed_response(doc, body.request_id)
            if replayed is not None:
                return replayed
            if body.used_gb < 0:
                _fail(400, "negative_usage", "usage must be non-negative")
            ledger = ledger_of(doc)
            if ledger.complete:
                _fail(400, "cycle_complete", "the billing cycle has already ended")
            ledger.usage.append(float(body.used_gb))
            ledger.quota -= float(body.used_gb)
            if ledger.complete:
                ledger.profit = cycle_profit(ledger, kappa)
            doc["ledger"] = ledger.to_dict()
            doc["history"]["current_month"].append(float(body.used_gb))
            response = {
                "day": ledger.day,
                "quota": ledger.quota,
                "complete": ledger.complete,
                "profit": ledger.profit,
            }
            _remember_response(doc, body.request_id, response)
            accounts.save(account_id, doc)
            return response

    @app.get("/accounts/{account_id}/recommendation")
    def get_recommendation(account_id: str, used_today: float = 0.0):
        doc = load_account(account_id)
        ledger = ledger_of(doc)
        if ledger.complete:
            _fail(400, "cycle_complete", "the billing cycle has already ended")
        if used_today < 0:
            _fail(400, "negative_usage", "usage must be non-negative")
        quote = current_quote()
        demand_for(doc, ledger)  # fail early with a clear code on missing history
        decision = daily_decision(
            ledger,
            _history_from_doc(doc),
            quote,
            _profile_from_doc(doc),
            kappa=kappa,
            used_today=used_today,
        )
        return {
            "role": _ROLE_WIRE[decision.role],
            "quantity": decision.quantity,
            "utility": decision.utility,
            "day": ledger.day,
            "quote": {
                "min_sell_price": quote.min_sell_price,
                "max_buy_price": quote.max_buy_price,
            },
        }

    @app.post("/accounts/{account_id}/trades")
    def post_trade(account_id: str, body: TradeBody):
        with locks.lock(account_id):
            doc = load_account(account_id)
            replayed = _replayed_response(doc, body.request_id)
            if replayed is not None:
                return replayed
            if body.quantity == 0:
                _fail(400, "zero_quantity", "zero-quantity trades are not recorded")
            check_price(body.price)
            ledger = ledger_of(doc)
            if ledger.complete:
                _fail(400, "cycle_complete", "the billing cycle has already ended")
            if body.quantity < 0 and -body.quantity > ledger.quota + _SELL_CAP_SLACK:
                _fail(
                    409,
                    "over_quota",
                    f"cannot sell {-body.quantity} GB with only {ledger.quota} GB held",
                )
            ledger.trades.append(Trade(ledger.day, float(body.quantity), float(body.price)))
            ledger.quota += float(body.quantity)
            doc["ledger"] = ledger.to_dict()
            response = {
                "day": ledger.day,
                "quantity": float(body.quantity),
                "price": float(body.price),
                "quota": ledger.quota,
            }
            _remember_response(doc, body.request_id, response)
            accounts.save(account_id, doc)
            return response

    @app.post("/accounts/{account_id}/whatif")
    def post_whatif(account_id: str, body: WhatIfBody):
        doc = load_account(account_id)
        if body.quantity < 0:
            _fail(400, "negative_quantity", "what-if quantities are magnitudes")
        if body.used_today < 0:
            _fail(400, "negative_usage", "usage must be non-negative")
        if body.min_sell_price is None and body.max_buy_price is None:
            quote = current_quote()
        elif body.min_sell_price is None or body.max_buy_price is None:
            _fail(400, "missing_prices", "override both prices or neither")
        else:
            check_price(body.min_sell_price)
            check_price(body.max_buy_price)
            try:
                quote = MarketQuote(body.min_sell_price, body.max_buy_price)
            except ValueError as exc:
                _fail(400, "crossed_quote", str(exc))
        ledger = ledger_of(doc)
        demand = demand_for(doc, ledger)
        profile = _profile_from_doc(doc)
        quota = ledger.quota - body.used_today
        utilities = {
            "buy": _position_utility(
                body.quantity, quote.min_sell_price, quota, demand,
                profile, profile.reference, kappa,
            ),
            "sell": _position_utility(
                -body.quantity, quote.max_buy_price, quota, demand,
                profile, profile.reference, kappa,
            ),
            "none": _position_utility(
                0.0, 0.0, quota, demand, profile, profile.reference, kappa
            ),
        }
        return {"quantity": body.quantity, "quota": quota, "utilities": utilities}

    @app.post("/accounts/{account_id}/elicitation")
    def post_elicitation(account_id: str, body: ElicitationBody):
        with locks.lock(account_id):
            doc = load_account(account_id)
            replayed = _replayed_response(doc, body.request_id)
            if replayed is not None:
                return replayed
            check_price(body.buy_price)
            check_price(body.sell_price)
            ledger = ledger_of(doc)
            if ledger.quota <= 0:
                _fail(400, "no_quota", "elicitation needs a positive quota position")
            demand = demand_for(doc, ledger)
            profile = _profile_from_doc(doc)
            report = {
                "day_index": ledger.day,
                "quota_at_day": ledger.quota,
                "demand": {
                    "quantities": list(demand.quantities),
                    "probabilities": list(demand.probabilities),
                },
                "buy_price": body.buy_price,
                "sell_price": body.sell_price,
            }
            reports = [_report_from_dict(r) for r in doc["reports"]]
            reports.append(_report_from_dict(report))
            try:
                result = estimate_over_cycle(
                    reports, mu=profile.mu, reference=profile.reference, kappa=kappa
                )
            except EstimationError as exc:
                _fail(400, "inconsistent_prices", str(exc))
            doc["reports"].append(report)
            doc["profile"]["beta"] = result.beta
            doc["profile"]["lam"] = result.lam
            response = {
                "beta": result.beta,
                "lam": result.lam,
                "days_used": result.days_used,
                "skipped": [{"day": d, "reason": why} for d, why in result.skipped],
            }
            _remember_response(doc, body.request_id, response)
            accounts.save(account_id, doc)
            return response

    @app.get("/accounts/{account_id}/ledger")
    def get_ledger(account_id: str):
        return load_account(account_id)["ledger"]

    return app
