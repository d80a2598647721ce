"""Decision engine and market simulator for mobile-data quota trading.

The package is organised as a small numerical library:

``core``
    Prospect-theory preference model: value/weighting functions,
    demand beliefs, reference framing, and the buy/sell objectives.
``optimizer``
    Optimal trade quantities and role choice, closed-form threshold
    prices, and an exhaustive-search oracle used for validation.
``estimation``
    Recovery of risk parameters from stated indifference prices.
``engine``
    Multi-day trading loop: demand prediction from usage history,
    quota ledger accounting, and cycle profit.
``simulate``
    Monte Carlo market simulation comparing trading strategies and
    risk profiles under random price walks and demand draws.
``sweeps``
    Tabulated parameter sweeps (threshold and quantity curves) for
    plotting and regression checks.
``service``
    HTTP advisor service exposing quotes, accounts, recommendations,
    trades, what-if analysis, and parameter elicitation.
``cli``
    Command-line entry points wrapping the above.
"""

from .core import (
    DEFAULT_KAPPA,
    DemandDistribution,
    MarketQuote,
    ReferencePolicy,
    RiskProfile,
    UserState,
    buyer_objective,
    buyer_objective_derivative,
    reference_point,
    satisfaction_loss,
    seller_objective,
    seller_objective_derivative,
    value,
    weight,
)
from .engine import (
    DEFAULT_CYCLE_LENGTH,
    CycleLedger,
    Trade,
    UsageHistory,
    cycle_profit,
    daily_decision,
    predict_demand,
    run_cycle,
    update_quota,
)
from .estimation import (
    EstimationError,
    EstimationResult,
    EstimationWarning,
    IndifferenceReport,
    estimate_over_cycle,
    indifference_residuals,
    solve_beta,
    solve_lambda,
    synthesize_indifference_prices,
)
from .optimizer import (
    Role,
    ThresholdPrices,
    TradeDecision,
    brute_force_oracle,
    buyer_thresholds,
    decide_role,
    seller_thresholds,
    solve_binary_buyer,
    solve_binary_seller,
    solve_buyer_general,
    solve_seller_general,
    threshold_prices,
)
from .simulate import (
    DemandKind,
    DemandModel,
    PriceProcess,
    ProfitStats,
    Strategy,
    monte_carlo,
    simulate_cycle,
    spread_evenly,
)
from .sweeps import (
    Sweep,
    beta_trend_at_bid,
    buying_threshold_vs_beta,
    buying_threshold_vs_distortion,
    buying_threshold_vs_loss_aversion,
    buying_threshold_vs_shortfall_chance,
    find_selling_crossover_bid,
    selling_quantity_vs_beta,
    selling_quantity_vs_bid,
    selling_quantity_vs_loss_aversion,
    standard_seller_instance,
)
from .service import create_app, load_quote_replay

__version__ = "0.1.0"
