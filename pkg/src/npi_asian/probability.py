"""Upper and lower probabilities of a positive payoff, and the pairwise
speculator / hedger decision rule built on them."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

from .errors import ValidationError
from .market_data import ReturnLadder
from .orderings import OrderingSource
from .pricing import AveragingConvention, OptionContract, ordering_average_prices

__all__ = ["ProbabilityInterval", "TradingDecision", "payoff_probability", "compare_for_trade"]


@dataclass(frozen=True)
class ProbabilityInterval:
    lower: float
    upper: float
    standard_error: tuple[float, float] = (0.0, 0.0)
    # Rational values, available after exact enumeration.
    exact: tuple[Fraction, Fraction] | None = None

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper <= 1.0):
            raise ValidationError(f"need 0 <= lower <= upper <= 1, got ({self.lower!r}, {self.upper!r})")


@dataclass(frozen=True)
class TradingDecision:
    speculator_choice: Literal["A", "B", "indifferent"]
    hedger_choice: Literal["A", "B", "abstain"]


def payoff_probability(
    contract: OptionContract,
    ladder: ReturnLadder,
    source: OrderingSource | None = None,
    convention: AveragingConvention | None = None,
    threads: int | None = None,
) -> ProbabilityInterval:
    """Lower and upper probability that ``contract`` ends with a positive payoff.

    For a call the upper probability counts orderings whose maximum average
    exceeds the strike and the lower one those whose minimum average does;
    puts mirror this with ``<``.
    """
    source = source or OrderingSource()
    prices = ordering_average_prices(
        ladder, contract.horizon, contract.initial_price, source, convention, threads
    )
    K = contract.strike
    if contract.kind == "call":
        hit_lo, hit_hi = prices.lower > K, prices.upper > K
    else:
        hit_lo, hit_hi = prices.upper < K, prices.lower < K
    f_lo, f_hi = hit_lo.astype(float), hit_hi.astype(float)
    exact = None
    if prices.exact:
        exact = (prices.fraction(hit_lo), prices.fraction(hit_hi))
        lo, hi = float(exact[0]), float(exact[1])
    else:
        lo, hi = prices.mean(f_lo), prices.mean(f_hi)
    return ProbabilityInterval(
        lo, hi, (prices.standard_error(f_lo), prices.standard_error(f_hi)), exact
    )


def compare_for_trade(prob_a: ProbabilityInterval, prob_b: ProbabilityInterval) -> TradingDecision:
    """Pick an underlying for a speculator and for a hedger.

    A speculator prefers the asset with the higher lower *or* higher upper
    probability; if each asset wins on one endpoint, or neither wins, the
    result is ``"indifferent"``. A hedger needs one asset's lower
    probability to exceed the other's upper probability, else abstains.
    """
    a_wins = prob_a.lower > prob_b.lower or prob_a.upper > prob_b.upper
    b_wins = prob_b.lower > prob_a.lower or prob_b.upper > prob_a.upper
    if a_wins and not b_wins:
        speculator = "A"
    elif b_wins and not a_wins:
        speculator = "B"
    else:
        speculator = "indifferent"
    if prob_a.lower > prob_b.upper:
        hedger = "A"
    elif prob_b.lower > prob_a.upper:
        hedger = "B"
    else:
        hedger = "abstain"
    return TradingDecision(speculator, hedger)
