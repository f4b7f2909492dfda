"""Geometric Brownian motion paths for the coverage study.

A path is split into a history segment that feeds the ladder and a future
segment whose realised average sets the benchmark price.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from .errors import ValidationError
from .market_data import PriceSeries
from .pricing import AveragingConvention, OptionContract

__all__ = ["GbmParams", "SplitPath", "simulate_log_path", "simulate_path", "benchmark_price", "write_paths_csv"]


@dataclass(frozen=True)
class GbmParams:
    """Per-step drift ``mu`` and volatility ``sigma`` of the log price.

    ``S[t+1] = S[t] * exp((mu - sigma**2 / 2) + sigma * Z[t])``.
    """

    drift: float = 0.02
    volatility: float = 0.02
    initial_price: float = 50.0
    total_steps: int = 110
    history_steps: int = 100

    def __post_init__(self):
        if not math.isfinite(self.drift):
            raise ValidationError("drift must be finite")
        if not (math.isfinite(self.volatility) and self.volatility >= 0):
            raise ValidationError(f"volatility must be >= 0, got {self.volatility!r}")
        if not (math.isfinite(self.initial_price) and self.initial_price > 0):
            raise ValidationError(f"initial_price must be positive, got {self.initial_price!r}")
        if not (1 <= self.history_steps < self.total_steps):
            raise ValidationError(
                f"need 1 <= history_steps < total_steps, got {self.history_steps}/{self.total_steps}"
            )

    @property
    def future_steps(self) -> int:
        return self.total_steps - self.history_steps


@dataclass(frozen=True)
class SplitPath:
    """History and future segments; ``future`` starts at the last history price."""

    history: PriceSeries
    future: PriceSeries

    @property
    def prices(self) -> np.ndarray:
        return np.concatenate([self.history.prices, self.future.prices[1:]])


def simulate_log_path(params: GbmParams, rng: np.random.Generator) -> np.ndarray:
    """Log prices ``ln S[0..total_steps]``.

    Normals come from ``rng.standard_normal`` (numpy's ziggurat sampler).
    """
    z = rng.standard_normal(params.total_steps)
    sigma = params.volatility
    steps = (params.drift - 0.5 * sigma * sigma) + sigma * z
    return math.log(params.initial_price) + np.concatenate([[0.0], np.cumsum(steps)])


def simulate_path(params: GbmParams, rng: np.random.Generator) -> SplitPath:
    """Draw one path and split it after ``history_steps``."""
    log_p = simulate_log_path(params, rng)
    prices = params.initial_price * np.exp(log_p - log_p[0])
    series = PriceSeries.from_prices(prices)
    h = params.history_steps
    return SplitPath(
        history=PriceSeries(series.dates[: h + 1], series.prices[: h + 1]),
        future=PriceSeries(series.dates[h:], series.prices[h:]),
    )


def benchmark_price(
    future: PriceSeries, contract: OptionContract, convention: AveragingConvention | None = None
) -> float:
    """Discounted payoff of ``contract`` on the realised future prices."""
    convention = convention or AveragingConvention()
    if len(future) != contract.horizon + 1:
        raise ValidationError(
            f"future segment has {len(future)} prices; horizon {contract.horizon} needs {contract.horizon + 1}"
        )
    p = future.prices
    avg = float(np.mean(p if convention.include_initial else p[1:]))
    payoff = avg - contract.strike if contract.kind == "call" else contract.strike - avg
    return contract.discount_factor * max(payoff, 0.0)


def write_paths_csv(paths: Iterable[SplitPath], out: IO[str]) -> None:
    """One row per (path, step) with the simulated price."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["path_id", "step", "price"])
    for pid, path in enumerate(paths):
        for step, price in enumerate(path.prices):
            w.writerow([pid, step, f"{price:.9g}"])
