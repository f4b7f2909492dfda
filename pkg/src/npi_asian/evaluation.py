"""Coverage, accuracy and precision of NPI price intervals against GBM
benchmarks, and the volatility sweep that produces them."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Sequence

import numpy as np

from ._rng import default_threads, derive_seed, stream
from .errors import ValidationError
from .gbm import GbmParams, benchmark_price, simulate_path
from .market_data import ReturnLadder, log_returns
from .orderings import OrderingSource
from .pricing import AveragingConvention, DiscountSpec, OptionContract, PriceInterval, price_interval

__all__ = [
    "StudyRecord",
    "StudyMetrics",
    "SweepSpec",
    "SweepRecord",
    "SweepResult",
    "compute_metrics",
    "run_sweep",
    "write_sweep_csv",
    "write_raw_csv",
    "read_raw_csv",
    "aggregate_raw",
]

# Relative slack for deciding containment; absorbs rounding on degenerate (sigma = 0) paths.
CONTAINMENT_RTOL = 1e-9


@dataclass(frozen=True)
class StudyRecord:
    npi: PriceInterval
    benchmark: float

    def __post_init__(self):
        if not self.benchmark >= 0:
            raise ValidationError(f"benchmark must be >= 0, got {self.benchmark!r}")

    def covered(self, rtol: float = 0.0) -> bool:
        slack = rtol * max(1.0, abs(self.benchmark))
        return self.npi.max_buying - slack <= self.benchmark <= self.npi.min_selling + slack


@dataclass(frozen=True)
class StudyMetrics:
    """``coverage`` is the share of intervals containing the benchmark,
    ``accuracy`` the mean distance from interval midpoint to benchmark, and
    ``precision`` the mean interval width."""

    coverage: float
    accuracy: float
    precision: float
    record_count: int


def compute_metrics(records: Sequence[StudyRecord], rtol: float = 0.0) -> StudyMetrics:
    if len(records) == 0:
        raise ValidationError("compute_metrics needs at least one record")
    covered = sum(r.covered(rtol) for r in records)
    acc = math.fsum(abs(r.npi.midpoint - r.benchmark) for r in records)
    width = math.fsum(r.npi.width for r in records)
    k = len(records)
    return StudyMetrics(covered / k, acc / k, width / k, k)


@dataclass(frozen=True)
class SweepSpec:
    """Volatility grid and per-path study design.

    Each path is simulated with ``gbm`` (its volatility replaced by the grid
    value), priced from its history with ``contract`` (spot set to the last
    history price, horizon to the future length) and compared with the
    realised benchmark. ``boundary_scale`` widens each ladder's boundary
    returns about their midpoint and is the knob for interval width.
    """

    volatility_grid: tuple[float, ...]
    paths_per_point: int = 1000
    gbm: GbmParams = field(default_factory=GbmParams)
    kind: str = "call"
    strike: float = 50.0
    discount: DiscountSpec = field(default_factory=DiscountSpec)
    source: OrderingSource = field(default_factory=lambda: OrderingSource.monte_carlo(1000))
    convention: AveragingConvention = field(default_factory=AveragingConvention)
    boundary_scale: float = 1.0
    containment_rtol: float = CONTAINMENT_RTOL

    def __post_init__(self):
        grid = tuple(float(s) for s in self.volatility_grid)
        if not grid:
            raise ValidationError("volatility grid must not be empty")
        if any(not (math.isfinite(s) and s >= 0) for s in grid):
            raise ValidationError(f"volatilities must be >= 0, got {grid}")
        if self.paths_per_point < 1:
            raise ValidationError("paths_per_point must be positive")
        if self.boundary_scale < 1:
            raise ValidationError("boundary_scale must be >= 1")
        object.__setattr__(self, "volatility_grid", grid)


@dataclass(frozen=True)
class SweepRecord:
    sigma: float
    path_id: int
    npi: PriceInterval
    benchmark: float


@dataclass(frozen=True)
class SweepResult:
    rows: list[tuple[float, StudyMetrics]]
    records: list[SweepRecord]


def _study_path(spec: SweepSpec, sigma: float, path_id: int, seed: int) -> SweepRecord:
    params = replace(spec.gbm, volatility=sigma)
    path = simulate_path(params, stream(seed, path_id, 0))
    contract = OptionContract(
        spec.kind, spec.strike, params.future_steps, path.history.last_close, spec.discount
    )
    ladder = ReturnLadder.from_returns(log_returns(path.history), boundary_scale=spec.boundary_scale)
    source = spec.source
    if not source.is_exact:
        source = replace(source, seed=derive_seed(seed, path_id, 1))
    npi = price_interval(contract, ladder, source, spec.convention, threads=1)
    return SweepRecord(sigma, path_id, npi, benchmark_price(path.future, contract, spec.convention))


def run_sweep(spec: SweepSpec, seed: int = 0, threads: int | None = None) -> SweepResult:
    """Simulate, price and score ``paths_per_point`` paths at every grid volatility.

    Path ``k`` uses the same normal draws at every volatility. Results do
    not depend on ``threads``.
    """
    threads = default_threads() if threads is None else max(1, int(threads))
    jobs = [(s, k) for s in spec.volatility_grid for k in range(spec.paths_per_point)]

    def work(job):
        return _study_path(spec, job[0], job[1], seed)

    if threads == 1:
        records = [work(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(work, jobs, chunksize=16))
    return SweepResult(aggregate_raw(records, spec.containment_rtol), records)


def aggregate_raw(records: Iterable[SweepRecord], rtol: float = CONTAINMENT_RTOL) -> list[tuple[float, StudyMetrics]]:
    """Group raw per-path records by volatility (first-seen order) and score them."""
    groups: dict[float, list[StudyRecord]] = {}
    for r in records:
        groups.setdefault(r.sigma, []).append(StudyRecord(r.npi, r.benchmark))
    return [(sigma, compute_metrics(recs, rtol)) for sigma, recs in groups.items()]


def _g(x: float) -> str:
    return f"{x:.9g}"


def write_sweep_csv(rows: Iterable[tuple[float, StudyMetrics]], out: IO[str]) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["sigma", "coverage", "accuracy", "precision", "paths"])
    for sigma, m in rows:
        w.writerow([_g(sigma), _g(m.coverage), _g(m.accuracy), _g(m.precision), m.record_count])


def write_raw_csv(records: Iterable[SweepRecord], out: IO[str]) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["sigma", "path_id", "max_buying", "min_selling", "benchmark"])
    for r in records:
        # Full precision so re-aggregation reproduces the summary exactly.
        w.writerow([repr(r.sigma), r.path_id, repr(r.npi.max_buying), repr(r.npi.min_selling), repr(r.benchmark)])


def read_raw_csv(src: IO[str]) -> list[SweepRecord]:
    out = []
    for row in csv.DictReader(src):
        npi = PriceInterval(float(row["max_buying"]), float(row["min_selling"]))
        out.append(SweepRecord(float(row["sigma"]), int(row["path_id"]), npi, float(row["benchmark"])))
    return out
