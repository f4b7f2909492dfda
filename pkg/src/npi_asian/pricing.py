"""Expected NPI prices of fixed-strike arithmetic-average Asian options.

For every ordering the future average price is bracketed by substituting
the interval endpoints of each step's return; positive-part payoffs are
then averaged over orderings. The lower expectation is the maximum buying
price and the upper one the minimum selling price.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal

import numpy as np

from ._rng import default_threads
from .errors import ValidationError
from .market_data import ReturnLadder
from .orderings import (
    AggregateBounds,
    OrderingSource,
    enumerate_arrangements,
    ordering_count,
    sample_blocks,
)

__all__ = [
    "DiscountSpec",
    "AveragingConvention",
    "OptionContract",
    "PriceInterval",
    "OrderingPrices",
    "average_price_bounds",
    "ordering_average_prices",
    "price_interval",
]


@dataclass(frozen=True)
class DiscountSpec:
    """Flat continuously compounded rate per step."""

    rate_per_step: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.rate_per_step) or self.rate_per_step < 0:
            raise ValidationError(f"rate_per_step must be finite and >= 0, got {self.rate_per_step!r}")

    def factor(self, horizon: int) -> float:
        return math.exp(-self.rate_per_step * horizon)


@dataclass(frozen=True)
class AveragingConvention:
    """Whether the spot price ``S_0`` is one of the averaged prices."""

    include_initial: bool = False

    def divisor(self, horizon: int) -> int:
        return horizon + 1 if self.include_initial else horizon


@dataclass(frozen=True)
class OptionContract:
    kind: Literal["call", "put"]
    strike: float
    horizon: int
    initial_price: float
    discount: DiscountSpec = field(default_factory=DiscountSpec)

    def __post_init__(self):
        if self.kind not in ("call", "put"):
            raise ValidationError(f"kind must be 'call' or 'put', got {self.kind!r}")
        if not (math.isfinite(self.strike) and self.strike > 0):
            raise ValidationError(f"strike must be positive, got {self.strike!r}")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValidationError(f"horizon must be a positive integer, got {self.horizon!r}")
        if not (math.isfinite(self.initial_price) and self.initial_price > 0):
            raise ValidationError(f"initial_price must be positive, got {self.initial_price!r}")

    @property
    def discount_factor(self) -> float:
        return self.discount.factor(self.horizon)

    def payoff_bounds(self, avg_lower, avg_upper):
        """Per-ordering (lower, upper) undiscounted payoffs."""
        K = self.strike
        if self.kind == "call":
            return np.maximum(avg_lower - K, 0.0), np.maximum(avg_upper - K, 0.0)
        return np.maximum(K - avg_upper, 0.0), np.maximum(K - avg_lower, 0.0)


@dataclass(frozen=True)
class PriceInterval:
    """``max_buying`` is the lower expected price, ``min_selling`` the upper.

    ``standard_error`` is ``(0, 0)`` for exact enumeration.
    """

    max_buying: float
    min_selling: float
    standard_error: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not (0 <= self.max_buying <= self.min_selling):
            raise ValidationError(
                f"need 0 <= max_buying <= min_selling, got ({self.max_buying!r}, {self.min_selling!r})"
            )

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.max_buying + self.min_selling)

    @property
    def width(self) -> float:
        return self.min_selling - self.max_buying


def average_price_bounds(
    bounds: AggregateBounds, S_0: float, convention: AveragingConvention | None = None
) -> tuple[float, float]:
    """Minimum and maximum average price for one ordering."""
    convention = convention or AveragingConvention()
    horizon = np.arange(1, bounds.m + 1)
    extra = S_0 if convention.include_initial else 0.0
    d = convention.divisor(bounds.m)
    lo = (extra + np.sum(S_0 * np.exp(horizon * bounds.lower))) / d
    hi = (extra + np.sum(S_0 * np.exp(horizon * bounds.upper))) / d
    return float(lo), float(hi)


def _average_prices(idx: np.ndarray, rungs: np.ndarray, S_0: float, include_initial: bool):
    """Vectorised :func:`average_price_bounds` over rows of interval indices."""
    with np.errstate(over="ignore"):
        lo = np.exp(np.cumsum(rungs[idx - 1], axis=1)).sum(axis=1)
        hi = np.exp(np.cumsum(rungs[idx], axis=1)).sum(axis=1)
        m = idx.shape[1]
        if include_initial:
            return S_0 * (1.0 + lo) / (m + 1), S_0 * (1.0 + hi) / (m + 1)
        return S_0 * lo / m, S_0 * hi / m


@dataclass(frozen=True, eq=False)
class OrderingPrices:
    """Average-price bounds for every evaluated ordering.

    In exact mode each row is one temporal arrangement with integer weight
    ``weights[k]`` out of ``denominator``; in Monte Carlo mode rows are
    equally weighted samples and ``weights`` is ``None``.
    """

    lower: np.ndarray
    upper: np.ndarray
    weights: np.ndarray | None = None
    denominator: int | None = None

    @property
    def exact(self) -> bool:
        return self.weights is not None

    def __len__(self) -> int:
        return len(self.lower)

    def mean(self, values: np.ndarray) -> float:
        if self.exact:
            return float(np.dot(values, self.weights.astype(np.float64)) / self.denominator)
        return float(np.mean(values))

    def standard_error(self, values: np.ndarray) -> float:
        if self.exact or len(values) < 2:
            return 0.0
        return float(np.std(values, ddof=1) / math.sqrt(len(values)))

    def fraction(self, mask: np.ndarray) -> Fraction:
        """Exact probability of ``mask`` (exact mode only)."""
        if not self.exact:
            raise ValueError("exact fractions need exact enumeration")
        return Fraction(int(self.weights[mask].astype(object).sum()), self.denominator)


def ordering_average_prices(
    ladder: ReturnLadder,
    horizon: int,
    S_0: float,
    source: OrderingSource,
    convention: AveragingConvention | None = None,
    threads: int | None = None,
) -> OrderingPrices:
    """Evaluate the minimum/maximum average price over the chosen orderings."""
    convention = convention or AveragingConvention()
    n, m, rungs = ladder.n, int(horizon), ladder.rungs
    inc = convention.include_initial
    if source.is_exact:
        los, his, ws = [], [], []
        for idx, w in enumerate_arrangements(n, m, source.enumeration_cap):
            lo, hi = _average_prices(idx, rungs, S_0, inc)
            los.append(lo)
            his.append(hi)
            ws.append(w)
        denominator = ordering_count(n, m) * math.factorial(m)
        return OrderingPrices(np.concatenate(los), np.concatenate(his), np.concatenate(ws), denominator)
    threads = default_threads() if threads is None else max(1, int(threads))
    parts = sample_blocks(n, m, source, lambda idx: _average_prices(idx, rungs, S_0, inc), threads)
    return OrderingPrices(np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def price_interval(
    contract: OptionContract,
    ladder: ReturnLadder,
    source: OrderingSource | None = None,
    convention: AveragingConvention | None = None,
    threads: int | None = None,
) -> PriceInterval:
    """Maximum buying and minimum selling price of ``contract``.

    Each is the discounted mean, over orderings, of the per-ordering lower
    or upper positive-part payoff. Raises
    :class:`~npi_asian.errors.CapacityError` when exact enumeration is
    requested beyond the cap.
    """
    source = source or OrderingSource()
    prices = ordering_average_prices(
        ladder, contract.horizon, contract.initial_price, source, convention, threads
    )
    B = contract.discount_factor
    pay_lo, pay_hi = contract.payoff_bounds(prices.lower, prices.upper)
    pay_lo, pay_hi = B * pay_lo, B * pay_hi
    return PriceInterval(
        prices.mean(pay_lo),
        prices.mean(pay_hi),
        (prices.standard_error(pay_lo), prices.standard_error(pay_hi)),
    )
