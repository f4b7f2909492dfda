"""Equally likely orderings of future returns among the ladder intervals.

An ordering places ``m`` future returns among the ``n + 1`` intervals of a
:class:`~npi_asian.market_data.ReturnLadder`; there are ``C(n+m, m)`` of
them, one per interleaving of ``m`` future values with ``n`` observed ones.
An interleaving fixes only how many future values fall in each interval.
Which future step gets which interval is resolved uniformly over the
distinct arrangements of that multiset. Together these reproduce
sequential one-step-ahead prediction, where step ``t`` falls in interval
``j`` with probability ``(1 + c_j) / (n + t)`` given ``c_j`` earlier steps
already there.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import IO, Iterator, Literal

import numpy as np

from ._rng import check_seed, stream
from .errors import CapacityError, ValidationError
from .market_data import ReturnLadder

__all__ = [
    "ENUMERATION_CAP",
    "SAMPLE_BLOCK",
    "OrderingAssignment",
    "AggregateBounds",
    "OrderingSource",
    "ordering_count",
    "enumerate_orderings",
    "enumerate_arrangements",
    "sample_ordering",
    "sample_interval_indices",
    "sample_blocks",
    "aggregate_bounds",
    "write_orderings_csv",
]

ENUMERATION_CAP = 10**6
# Cap on evaluated arrangements, (n+1)**m, in exact mode.
ARRANGEMENT_CAP = 10**7
# Monte Carlo samples per RNG stream; fixed so results are thread-count independent.
SAMPLE_BLOCK = 4096


def _check_nm(n: int, m: int) -> None:
    if int(n) != n or int(m) != m or n < 1 or m < 1:
        raise ValidationError(f"n and m must be positive integers, got n={n!r}, m={m!r}")


@dataclass(frozen=True)
class OrderingAssignment:
    """Interval index (1-based) of each future step, in temporal order."""

    interval_index: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "interval_index", tuple(int(j) for j in self.interval_index))

    @property
    def m(self) -> int:
        return len(self.interval_index)

    @property
    def multiset(self) -> tuple[int, ...]:
        """Sorted indices; identifies the interleaving."""
        return tuple(sorted(self.interval_index))

    def positions(self) -> tuple[int, ...]:
        """1-based positions of the future values in the merged ranking."""
        return tuple(j + k for k, j in enumerate(self.multiset))


@dataclass(frozen=True, eq=False)
class AggregateBounds:
    """Per-horizon bounds on the mean future log return ``R_hat_i``, i = 1..m."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=np.float64)
        hi = np.asarray(self.upper, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValidationError("lower and upper must be equally long vectors")
        if np.any(lo > hi):
            raise ValidationError("aggregate lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def m(self) -> int:
        return len(self.lower)


@dataclass(frozen=True)
class OrderingSource:
    """How orderings are produced: full enumeration or seeded sampling."""

    mode: Literal["exact", "monte-carlo"] = "monte-carlo"
    sample_count: int = 10_000
    seed: int = 0
    enumeration_cap: int = ENUMERATION_CAP

    def __post_init__(self):
        if self.mode not in ("exact", "monte-carlo"):
            raise ValidationError(f"unknown ordering mode {self.mode!r}")
        if self.mode == "monte-carlo" and (int(self.sample_count) != self.sample_count or self.sample_count < 1):
            raise ValidationError(f"sample_count must be a positive integer, got {self.sample_count!r}")
        try:
            check_seed(self.seed)
        except ValueError as exc:
            raise ValidationError(str(exc)) from None

    @classmethod
    def exact(cls, enumeration_cap: int = ENUMERATION_CAP) -> "OrderingSource":
        return cls(mode="exact", enumeration_cap=enumeration_cap)

    @classmethod
    def monte_carlo(cls, sample_count: int, seed: int = 0) -> "OrderingSource":
        return cls(mode="monte-carlo", sample_count=sample_count, seed=seed)

    @property
    def is_exact(self) -> bool:
        return self.mode == "exact"


def ordering_count(n: int, m: int) -> int:
    """Number of equally likely orderings, ``C(n+m, m)``."""
    _check_nm(n, m)
    return math.comb(n + m, m)


def _check_cap(n: int, m: int, cap: int) -> int:
    total = ordering_count(n, m)
    if total > cap:
        raise CapacityError(
            f"C({n}+{m}, {m}) = {total} orderings exceeds the enumeration cap {cap}; use Monte Carlo"
        )
    return total


def enumerate_orderings(n: int, m: int, cap: int = ENUMERATION_CAP) -> Iterator[OrderingAssignment]:
    """Yield each of the ``C(n+m, m)`` orderings once, in lexicographic order.

    Each ordering is returned in its canonical (sorted) arrangement.
    """
    _check_cap(n, m, cap)
    for combo in combinations_with_replacement(range(1, n + 2), m):
        yield OrderingAssignment(combo)


def _multiplicity_weights(idx: np.ndarray) -> np.ndarray:
    """Product of factorials of the interval counts in each row."""
    s = np.sort(idx, axis=1)
    run = np.ones(len(s), dtype=np.int64)
    w = np.ones(len(s), dtype=np.int64)
    for k in range(1, s.shape[1]):
        run = np.where(s[:, k] == s[:, k - 1], run + 1, 1)
        w *= run
    return w


def enumerate_arrangements(
    n: int, m: int, cap: int = ENUMERATION_CAP, chunk: int = 1 << 16
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Every temporal arrangement with its integer probability weight.

    Yields ``(indices, weights)`` chunks over all ``(n+1)**m`` index
    sequences in lexicographic order. A sequence's probability is
    ``weight / (C(n+m, m) * m!)``.
    """
    _check_cap(n, m, cap)
    total = (n + 1) ** m
    if total > ARRANGEMENT_CAP:
        raise CapacityError(f"{total} arrangements exceed the exact-mode limit {ARRANGEMENT_CAP}")
    powers = (n + 1) ** np.arange(m - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        lin = np.arange(start, min(start + chunk, total), dtype=np.int64)
        idx = (lin[:, None] // powers) % (n + 1) + 1
        yield idx, _multiplicity_weights(idx)


def sample_interval_indices(n: int, m: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` uniform orderings as an ``(size, m)`` array of interval indices.

    Draws a uniform ``m``-subset of the ``n + m`` merged positions, converts
    sorted positions to interval indices, then shuffles the temporal order.
    """
    _check_nm(n, m)
    keys = rng.random((size, n + m))
    pos = np.argpartition(keys, m - 1, axis=1)[:, :m]
    pos.sort(axis=1)
    idx = pos - np.arange(m) + 1
    return rng.permuted(idx, axis=1)


def sample_ordering(n: int, m: int, rng: np.random.Generator) -> OrderingAssignment:
    """One ordering drawn uniformly over the ``C(n+m, m)`` interleavings."""
    return OrderingAssignment(sample_interval_indices(n, m, rng, 1)[0])


def sample_blocks(n: int, m: int, source: OrderingSource, fn, threads: int = 1) -> list:
    """Apply ``fn`` to each fixed-size block of sampled orderings.

    Block ``b`` always draws from the stream keyed ``(b,)`` under
    ``source.seed``; results come back in block order for any ``threads``.
    """
    counts = [min(SAMPLE_BLOCK, source.sample_count - s) for s in range(0, source.sample_count, SAMPLE_BLOCK)]

    def work(b: int):
        return fn(sample_interval_indices(n, m, stream(source.seed, b), counts[b]))

    if threads <= 1 or len(counts) == 1:
        return [work(b) for b in range(len(counts))]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, range(len(counts))))


def aggregate_bounds(ordering: OrderingAssignment, ladder: ReturnLadder) -> AggregateBounds:
    """Bounds on ``R_hat_i`` for one ordering.

    Step ``t`` in interval ``I_j`` contributes ``r(j-1)`` to the lower and
    ``r(j)`` to the upper running mean.
    """
    idx = np.asarray(ordering.interval_index, dtype=np.int64)
    if len(idx) == 0:
        raise ValidationError("an ordering needs at least one future step")
    if idx.min() < 1 or idx.max() > ladder.interval_count:
        raise IndexError(f"interval index outside 1..{ladder.interval_count}: {ordering.interval_index}")
    horizon = np.arange(1, len(idx) + 1)
    lower = np.cumsum(ladder.rungs[idx - 1]) / horizon
    upper = np.cumsum(ladder.rungs[idx]) / horizon
    return AggregateBounds(lower, upper)


def write_orderings_csv(orderings, out: IO[str]) -> None:
    """Debug dump, one row per ordering with its interval indices."""
    w = csv.writer(out, lineterminator="\n")
    header_written = False
    for o in orderings:
        if not header_written:
            w.writerow([f"step_{t}" for t in range(1, o.m + 1)])
            header_written = True
        w.writerow(o.interval_index)
