"""Nonparametric predictive inference (NPI) pricing of arithmetic-average Asian options."""

from .errors import CapacityError, DataError, LadderError, NPIError, ValidationError
from .evaluation import (
    StudyMetrics,
    StudyRecord,
    SweepSpec,
    compute_metrics,
    run_sweep,
)
from .gbm import GbmParams, SplitPath, benchmark_price, simulate_path
from .market_data import (
    PriceSeries,
    ReturnLadder,
    WindowPolicy,
    build_ladder,
    load_price_series,
    log_returns,
)
from .orderings import (
    AggregateBounds,
    OrderingAssignment,
    OrderingSource,
    aggregate_bounds,
    enumerate_orderings,
    ordering_count,
    sample_ordering,
)
from .pricing import (
    AveragingConvention,
    DiscountSpec,
    OptionContract,
    PriceInterval,
    average_price_bounds,
    price_interval,
)
from .probability import ProbabilityInterval, TradingDecision, compare_for_trade, payoff_probability

__version__ = "0.1.0"
