"""Batch command line: solve, sweep, simulate, estimate, serve.

Subcommands
-----------
``solve``
    Best trade for a single configured instance, printed as JSON.
``thresholds``
    One threshold or sale-size curve as CSV; ``--sweep`` picks the axis
    (``beta``, ``lam``, ``mu``, ``p``, or ``price``).
``simulate``
    Monte Carlo campaign over strategies and profiles; per-replica CSV
    plus a JSON stats summary next to it.
``estimate``
    Risk parameters from a file of indifference reports, as JSON.
``serve``
    Run the advisor HTTP service.

Configuration comes from a TOML or JSON file named with ``--config``;
command-line flags override the file.  Every artifact starts with a
header (comment lines in CSV, fields in JSON) recording the seed and a
sha256 hash of the fully resolved configuration, so any output can be
traced back to the exact inputs that produced it.  An existing output
file is never overwritten unless ``--force`` is given.

Exit status: 0 on success, 2 on configuration problems, 3 when the
numerics fail (inconsistent elicitation answers, solver breakdown).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - Python 3.10
    import tomli as tomllib

from .core import (
    DEFAULT_KAPPA,
    DemandDistribution,
    MarketQuote,
    ReferencePolicy,
    RiskProfile,
    UserState,
)
from .estimation import EstimationError, IndifferenceReport, estimate_over_cycle
from .optimizer import decide_role
from .simulate import DemandKind, DemandModel, PriceProcess, Strategy, monte_carlo
from .sweeps import (
    buying_threshold_vs_beta,
    buying_threshold_vs_distortion,
    buying_threshold_vs_loss_aversion,
    buying_threshold_vs_shortfall_chance,
    selling_quantity_vs_bid,
)

__all__ = ["main"]


class ConfigError(Exception):
    """The run cannot start: bad flags, bad config, or blocked output."""


class NumericalFailure(Exception):
    """The run started but the numerics gave no usable answer."""


# ---------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------


def load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    text = path.read_text()
    if path.suffix == ".toml":
        try:
            return tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config {path} is not valid TOML: {exc}") from exc
    if path.suffix == ".json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    raise ConfigError(f"config {path} must be a .toml or .json file")


def config_hash(resolved: dict) -> str:
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _claim_output(path: Path | None, force: bool) -> None:
    if path is not None and path.exists() and not force:
        raise ConfigError(f"refusing to overwrite {path} (pass --force)")


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _profile_from(cfg: dict, where: str) -> RiskProfile:
    try:
        reference = ReferencePolicy(cfg.get("reference", "high"))
    except ValueError as exc:
        raise ConfigError(f"{where}: unknown reference policy") from exc
    try:
        return RiskProfile(
            beta=float(cfg.get("beta", 1.0)),
            lam=float(cfg.get("lam", 1.0)),
            mu=float(cfg.get("mu", 1.0)),
            reference=reference,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _demand_from(cfg: dict) -> DemandDistribution:
    quantities = cfg.get("quantities")
    if not quantities:
        raise ConfigError("demand: quantities are required")
    probabilities = cfg.get("probabilities")
    try:
        if probabilities is None:
            return DemandDistribution.from_samples(quantities)
        return DemandDistribution(tuple(quantities), tuple(probabilities))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"demand: {exc}") from exc


def _grid_from(cfg: dict, default: tuple[float, float, int]) -> list[float]:
    start = float(cfg.get("start", default[0]))
    stop = float(cfg.get("stop", default[1]))
    points = int(cfg.get("points", default[2]))
    if points < 2:
        raise ConfigError("grid: needs at least two points")
    if not stop > start:
        raise ConfigError("grid: stop must exceed start")
    step = (stop - start) / (points - 1)
    return [start + i * step for i in range(points)]


def _table(config: dict, key: str) -> dict:
    value = config.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError(f"{key}: expected a table/object")
    return value


# ---------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------


def _cmd_solve(args, config: dict) -> int:
    quote_cfg = _table(config, "quote")
    state_cfg = _table(config, "state")
    try:
        quote = MarketQuote(
            min_sell_price=float(quote_cfg["min_sell_price"]),
            max_buy_price=float(quote_cfg["max_buy_price"]),
        )
        state = UserState(
            quota=float(state_cfg["quota"]),
            kappa=float(state_cfg.get("kappa", DEFAULT_KAPPA)),
        )
    except KeyError as exc:
        raise ConfigError(f"solve config is missing {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    demand = _demand_from(_table(config, "demand"))
    profile = _profile_from(_table(config, "profile"), "profile")
    policy = None
    if "policy" in config:
        try:
            policy = ReferencePolicy(config["policy"])
        except ValueError as exc:
            raise ConfigError("policy must be 'high' or 'low'") from exc

    resolved = {
        "command": "solve",
        "quote": [quote.min_sell_price, quote.max_buy_price],
        "state": [state.quota, state.kappa],
        "demand": [list(demand.quantities), list(demand.probabilities)],
        "profile": [profile.beta, profile.lam, profile.mu, profile.reference.value],
        "policy": None if policy is None else policy.value,
    }
    try:
        decision = decide_role(quote, state, demand, profile, policy)
    except (ValueError, ArithmeticError) as exc:
        raise NumericalFailure(str(exc)) from exc

    _claim_output(args.out, args.force)
    _emit(
        json.dumps(
            {
                "role": decision.role.value,
                "quantity": decision.quantity,
                "utility": decision.utility,
                "config_hash": config_hash(resolved),
                "seed": args.seed,
            },
            indent=2,
        )
        + "\n",
        args.out,
    )
    return 0


_GRID_DEFAULTS = {
    "beta": (0.5, 1.0, 21),
    "lam": (1.0, 5.0, 17),
    "mu": (0.5, 1.0, 21),
    "p": (0.05, 0.95, 19),
    "price": (5.0, 55.0, 26),
}


def _cmd_thresholds(args, config: dict) -> int:
    axis = args.sweep or config.get("sweep")
    if axis not in _GRID_DEFAULTS:
        raise ConfigError(
            "pick a sweep axis with --sweep "
            f"({', '.join(sorted(_GRID_DEFAULTS))})"
        )
    profile_cfg = _table(config, "profile")
    beta = float(profile_cfg.get("beta", 0.88))
    lam = float(profile_cfg.get("lam", 2.25))
    mu = float(profile_cfg.get("mu", 1.0))
    quota = float(config.get("quota", 2.0))
    grid = _grid_from(_table(config, "grid"), _GRID_DEFAULTS[axis])

    resolved = {
        "command": "thresholds",
        "sweep": axis,
        "profile": [beta, lam, mu],
        "quota": quota,
        "grid": grid,
    }
    try:
        if axis == "beta":
            high_prob = float(config.get("high_prob", 0.5))
            resolved["high_prob"] = high_prob
            sweep = buying_threshold_vs_beta(
                grid, lam=lam, mu=mu, high_prob=high_prob, quota=quota
            )
        elif axis == "lam":
            high_prob = float(config.get("high_prob", 0.5))
            resolved["high_prob"] = high_prob
            sweep = buying_threshold_vs_loss_aversion(
                grid, beta=beta, mu=mu, high_prob=high_prob, quota=quota
            )
        elif axis == "mu":
            if "high_prob" not in config:
                raise ConfigError(
                    "the mu sweep needs an explicit high_prob: its direction "
                    "flips with the shortfall chance"
                )
            high_prob = float(config["high_prob"])
            resolved["high_prob"] = high_prob
            sweep = buying_threshold_vs_distortion(
                grid, high_prob=high_prob, beta=beta, lam=lam, quota=quota
            )
        elif axis == "p":
            sweep = buying_threshold_vs_shortfall_chance(
                grid, beta=beta, lam=lam, mu=mu, quota=quota
            )
        else:  # price
            sweep = selling_quantity_vs_bid(grid, beta=beta, lam=lam, mu=mu)
    except ConfigError:
        raise
    except (ValueError, ArithmeticError) as exc:
        raise NumericalFailure(str(exc)) from exc

    rows = sweep.rows()
    columns = list(rows[0])
    buffer = io.StringIO()
    buffer.write(f"# config_hash={config_hash(resolved)}\n")
    buffer.write(f"# seed={args.seed}\n")
    writer = csv.DictWriter(buffer, fieldnames=columns)
    writer.writeheader()
    writer.writerows({k: repr(v) for k, v in row.items()} for row in rows)
    _claim_output(args.out, args.force)
    _emit(buffer.getvalue(), args.out)
    return 0


def _cmd_simulate(args, config: dict) -> int:
    replicas = args.replicas if args.replicas is not None else int(config.get("replicas", 1000))
    if replicas < 1:
        raise ConfigError("replicas must be at least 1")
    p_c = args.pc if args.pc is not None else float(config.get("pc", 0.1))
    seed = args.seed

    market_cfg = _table(config, "market")
    try:
        process = PriceProcess(
            p_c=p_c,
            initial_min_sell=float(market_cfg.get("initial_min_sell", 20.0)),
            initial_max_buy=float(market_cfg.get("initial_max_buy", 16.0)),
            coupled=bool(market_cfg.get("coupled", True)),
            floor=float(market_cfg.get("floor", 1.0)),
            step=float(market_cfg.get("step", 1.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"market: {exc}") from exc

    demand_cfg = _table(config, "demand")
    try:
        demand_model = DemandModel(
            kind=DemandKind(demand_cfg.get("kind", "uniform")),
            mean=float(demand_cfg.get("mean", 2.0)),
            std=float(demand_cfg.get("std", 1.0 / 3.0)),
            half_width=float(demand_cfg.get("half_width", 1.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"demand: {exc}") from exc

    cycle_cfg = _table(config, "cycle")
    cycle_kwargs = {
        "initial_quota": float(cycle_cfg.get("initial_quota", 2.0)),
        "kappa": float(cycle_cfg.get("kappa", DEFAULT_KAPPA)),
        "cycle_length": int(cycle_cfg.get("cycle_length", 30)),
        "prior_months": int(cycle_cfg.get("prior_months", 3)),
    }

    strategy_names = config.get(
        "strategies", [s.value for s in Strategy]
    )
    try:
        strategies = [Strategy(name) for name in strategy_names]
    except ValueError as exc:
        raise ConfigError(
            f"unknown strategy; choose from "
            f"{', '.join(s.value for s in Strategy)}"
        ) from exc

    profiles_cfg = _table(config, "profiles") or {"neutral": {}}
    profiles = {
        name: _profile_from(cfg, f"profiles.{name}")
        for name, cfg in profiles_cfg.items()
    }

    resolved = {
        "command": "simulate",
        "replicas": replicas,
        "pc": p_c,
        "seed": seed,
        "market": [
            process.initial_min_sell, process.initial_max_buy,
            process.coupled, process.floor, process.step,
        ],
        "demand": [demand_model.kind.value, demand_model.mean,
                   demand_model.std, demand_model.half_width],
        "cycle": sorted(cycle_kwargs.items()),
        "strategies": [s.value for s in strategies],
        "profiles": {
            name: [p.beta, p.lam, p.mu, p.reference.value]
            for name, p in sorted(profiles.items())
        },
    }
    digest = config_hash(resolved)

    summary: dict = {"config_hash": digest, "seed": seed, "results": {}}
    buffer = io.StringIO()
    buffer.write(f"# config_hash={digest}\n")
    buffer.write(f"# seed={seed}\n")
    writer = csv.writer(buffer)
    writer.writerow(["replica", "strategy", "profile", "profit"])
    try:
        for strategy in strategies:
            for name, profile in profiles.items():
                stats = monte_carlo(
                    replicas,
                    strategy,
                    profile,
                    price_process=process,
                    demand_model=demand_model,
                    base_seed=seed,
                    **cycle_kwargs,
                )
                summary["results"].setdefault(strategy.value, {})[name] = (
                    stats.to_dict()
                )
                writer.writerows(
                    [i, strategy.value, name, repr(profit)]
                    for i, profit in enumerate(stats.profits)
                )
    except (ValueError, ArithmeticError) as exc:
        raise NumericalFailure(str(exc)) from exc

    _claim_output(args.out, args.force)
    summary_path = None if args.out is None else args.out.with_suffix(".json")
    if summary_path is not None:
        _claim_output(summary_path, args.force)
        summary_path.write_text(json.dumps(summary, indent=2) + "\n")
    _emit(buffer.getvalue(), args.out)
    return 0


def _report_from_config(entry: dict, index: int) -> IndifferenceReport:
    try:
        demand_cfg = entry["demand"]
        return IndifferenceReport(
            day_index=int(entry["day_index"]),
            quota_at_day=float(entry["quota_at_day"]),
            demand_snapshot=DemandDistribution(
                tuple(float(q) for q in demand_cfg["quantities"]),
                tuple(float(p) for p in demand_cfg["probabilities"]),
            ),
            buy_price=float(entry["buy_price"]),
            sell_price=float(entry["sell_price"]),
        )
    except KeyError as exc:
        raise ConfigError(
            f"reports[{index}] is missing {exc.args[0]!r}"
        ) from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"reports[{index}]: {exc}") from exc


def _cmd_estimate(args, config: dict) -> int:
    source = config.get("reports")
    if isinstance(source, str):
        path = Path(source)
        if not path.exists():
            raise ConfigError(f"reports file {path} does not exist")
        try:
            source = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"reports file {path} is not valid JSON: {exc}") from exc
    if not isinstance(source, list) or not source:
        raise ConfigError(
            "estimate needs 'reports': a non-empty list of report entries "
            "or a path to a JSON file holding one"
        )
    reports = [_report_from_config(entry, i) for i, entry in enumerate(source)]
    mu = float(config.get("mu", 1.0))
    kappa = float(config.get("kappa", DEFAULT_KAPPA))
    try:
        reference = ReferencePolicy(config.get("reference", "high"))
    except ValueError as exc:
        raise ConfigError("reference must be 'high' or 'low'") from exc

    resolved = {
        "command": "estimate",
        "mu": mu,
        "kappa": kappa,
        "reference": reference.value,
        "reports": [
            [r.day_index, r.quota_at_day, list(r.demand_snapshot.quantities),
             list(r.demand_snapshot.probabilities), r.buy_price, r.sell_price]
            for r in reports
        ],
    }
    try:
        result = estimate_over_cycle(reports, mu=mu, reference=reference, kappa=kappa)
    except EstimationError as exc:
        raise NumericalFailure(str(exc)) from exc

    _claim_output(args.out, args.force)
    _emit(
        json.dumps(
            {
                "beta": result.beta,
                "lam": result.lam,
                "days_used": result.days_used,
                "skipped": [{"day": d, "reason": why} for d, why in result.skipped],
                "per_day": [
                    {"day": d, "beta": b, "lam": l} for d, b, l in result.per_day
                ],
                "config_hash": config_hash(resolved),
                "seed": args.seed,
            },
            indent=2,
        )
        + "\n",
        args.out,
    )
    return 0


def _cmd_serve(args, config: dict) -> int:
    service_cfg = _table(config, "service")
    storage = Path(service_cfg.get("storage_dir", "advisor-state"))
    host = args.host or service_cfg.get("host", "127.0.0.1")
    port = args.port if args.port is not None else int(service_cfg.get("port", 8000))
    replay = service_cfg.get("quote_replay")
    kappa = float(service_cfg.get("kappa", DEFAULT_KAPPA))

    from .service import create_app

    try:
        app = create_app(storage, quote_replay=replay, kappa=kappa)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="info")
    return 0


# ---------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quotatrader",
        description="Quota-trading decision engine: solve, sweep, simulate, "
        "estimate, serve.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, help="TOML or JSON configuration file")
        p.add_argument("--out", type=Path, help="output path (default: stdout)")
        p.add_argument("--force", action="store_true", help="overwrite existing outputs")
        p.add_argument("--seed", type=int, default=0, help="base random seed")

    solve = sub.add_parser("solve", help="best trade for one configured instance")
    common(solve)

    thresholds = sub.add_parser("thresholds", help="threshold or sale-size curve CSV")
    common(thresholds)
    thresholds.add_argument(
        "--sweep",
        choices=sorted(_GRID_DEFAULTS),
        help="parameter axis to sweep",
    )

    simulate = sub.add_parser("simulate", help="Monte Carlo campaign CSV + JSON")
    common(simulate)
    simulate.add_argument("--replicas", type=int, help="number of seeded cycles")
    simulate.add_argument("--pc", type=float, help="daily price-step probability")

    estimate = sub.add_parser("estimate", help="risk parameters from reports")
    common(estimate)

    serve = sub.add_parser("serve", help="run the advisor HTTP service")
    common(serve)
    serve.add_argument("--host", help="listen address")
    serve.add_argument("--port", type=int, help="listen port")

    return parser


_HANDLERS = {
    "solve": _cmd_solve,
    "thresholds": _cmd_thresholds,
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        return _HANDLERS[args.command](args, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
