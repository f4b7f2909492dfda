"""Price history ingestion, log returns and the ranked return ladder."""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import DataError, LadderError

__all__ = [
    "PriceSeries",
    "ReturnLadder",
    "WindowPolicy",
    "load_price_series",
    "log_returns",
    "build_ladder",
    "write_ladder_csv",
]


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Closing prices on strictly increasing dates."""

    dates: np.ndarray
    prices: np.ndarray

    def __init__(self, dates: Iterable[dt.date], prices: Iterable[float]):
        if isinstance(dates, np.ndarray) and np.issubdtype(dates.dtype, np.datetime64):
            d_arr = _frozen(dates, "datetime64[D]")
        else:
            dates = [d if isinstance(d, dt.date) else dt.date.fromisoformat(str(d)) for d in dates]
            d_arr = _frozen(dates, "datetime64[D]")
        p_arr = _frozen(list(prices), np.float64)
        if d_arr.shape != p_arr.shape or d_arr.ndim != 1:
            raise DataError("dates and prices must be one-dimensional and equally long")
        if len(p_arr) < 2:
            raise DataError("a price series needs at least 2 observations")
        if not np.all(np.isfinite(p_arr)) or np.any(p_arr <= 0):
            bad = int(np.flatnonzero(~(p_arr > 0) | ~np.isfinite(p_arr))[0])
            raise DataError(f"price at index {bad} is not strictly positive: {p_arr[bad]!r}")
        if np.any(np.diff(d_arr).astype(np.int64) <= 0):
            raise DataError("dates must be strictly increasing")
        object.__setattr__(self, "dates", d_arr)
        object.__setattr__(self, "prices", p_arr)

    @classmethod
    def from_prices(cls, prices: Sequence[float], start: dt.date = dt.date(2000, 1, 1)) -> "PriceSeries":
        """Series on a synthetic daily calendar starting at ``start``."""
        start64 = np.datetime64(start, "D")
        return cls(start64 + np.arange(len(prices)), prices)

    def __len__(self) -> int:
        return len(self.prices)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PriceSeries):
            return NotImplemented
        return np.array_equal(self.dates, other.dates) and np.array_equal(self.prices, other.prices)

    @property
    def first_date(self) -> dt.date:
        return self.dates[0].astype(dt.date)

    @property
    def last_date(self) -> dt.date:
        return self.dates[-1].astype(dt.date)

    @property
    def last_close(self) -> float:
        return float(self.prices[-1])

    def between(self, start: dt.date | None = None, end: dt.date | None = None) -> "PriceSeries":
        """Sub-series with ``start <= date <= end`` (either bound optional)."""
        mask = np.ones(len(self), dtype=bool)
        if start is not None:
            mask &= self.dates >= np.datetime64(start, "D")
        if end is not None:
            mask &= self.dates <= np.datetime64(end, "D")
        if mask.sum() < 2:
            raise DataError(f"window {start}..{end} selects fewer than 2 prices")
        return PriceSeries(self.dates[mask], self.prices[mask])


def load_price_series(
    source: IO[bytes] | IO[str] | bytes | str,
    date_column: str = "date",
    price_column: str = "close",
) -> PriceSeries:
    """Parse a headed CSV into a :class:`PriceSeries`.

    ``source`` may be a binary or text stream, raw bytes, or the CSV text
    itself. Rows are sorted by date; errors carry the 1-based line number
    (the header is line 1).
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8-sig")
    elif isinstance(source, str):
        text = source
    else:
        raw = source.read()
        text = raw.decode("utf-8-sig") if isinstance(raw, bytes) else raw
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty CSV: a header row is required") from None
    except csv.Error as exc:
        raise DataError(f"malformed CSV: {exc}", row=1) from None
    header = [h.strip() for h in header]
    for col in (date_column, price_column):
        if col not in header:
            raise DataError(f"column {col!r} not found in header {header}", row=1)
    di, pi = header.index(date_column), header.index(price_column)

    rows: list[tuple[dt.date, float, int]] = []
    seen: dict[dt.date, int] = {}
    line = 1
    while True:
        try:
            rec = next(reader)
        except StopIteration:
            break
        except csv.Error as exc:
            raise DataError(f"malformed CSV: {exc}", row=line + 1) from None
        line = reader.line_num
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) != len(header):
            raise DataError(f"expected {len(header)} fields, got {len(rec)}", row=line)
        try:
            day = dt.date.fromisoformat(rec[di].strip())
        except ValueError:
            raise DataError(f"unparsable date {rec[di]!r} (expected YYYY-MM-DD)", row=line) from None
        try:
            price = float(rec[pi])
        except ValueError:
            raise DataError(f"unparsable price {rec[pi]!r}", row=line) from None
        if not math.isfinite(price) or price <= 0:
            raise DataError(f"price must be strictly positive, got {rec[pi].strip()!r}", row=line)
        if day in seen:
            raise DataError(f"duplicate date {day.isoformat()} (first seen on row {seen[day]})", row=line)
        seen[day] = line
        rows.append((day, price, line))

    if len(rows) < 2:
        raise DataError("a price series needs at least 2 observations")
    rows.sort(key=lambda r: r[0])
    return PriceSeries([r[0] for r in rows], [r[1] for r in rows])


def log_returns(series: PriceSeries) -> np.ndarray:
    """Per-step log returns ``ln(p[t+1] / p[t])``; length ``len(series) - 1``."""
    p = series.prices
    return np.log(p[1:] / p[:-1])


@dataclass(frozen=True, eq=False)
class ReturnLadder:
    """Sorted returns ``r(1)..r(n)`` plus boundary rungs ``r(0)`` and ``r(n+1)``.

    The ladder defines ``n + 1`` intervals ``I_j = [r(j-1), r(j)]``. Ties are
    kept as duplicate rungs, so some intervals may have zero width.
    """

    sorted_returns: np.ndarray
    lower_boundary: float
    upper_boundary: float
    rungs: np.ndarray = field(repr=False)

    def __init__(self, sorted_returns: Iterable[float], lower_boundary: float, upper_boundary: float):
        r = np.asarray(list(sorted_returns) if not isinstance(sorted_returns, np.ndarray) else sorted_returns,
                       dtype=np.float64)
        if r.ndim != 1 or len(r) < 1:
            raise LadderError("a ladder needs at least one observed return")
        if not np.all(np.isfinite(r)):
            raise LadderError("returns must be finite")
        if np.any(np.diff(r) < 0):
            raise LadderError("sorted_returns must be non-decreasing")
        lo, hi = float(lower_boundary), float(upper_boundary)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise LadderError("boundary returns must be finite")
        if lo > r[0] or hi < r[-1]:
            raise LadderError(
                f"boundaries ({lo!r}, {hi!r}) do not bracket observed returns [{r[0]!r}, {r[-1]!r}]"
            )
        object.__setattr__(self, "sorted_returns", _frozen(r, np.float64))
        object.__setattr__(self, "lower_boundary", lo)
        object.__setattr__(self, "upper_boundary", hi)
        object.__setattr__(self, "rungs", _frozen(np.concatenate([[lo], r, [hi]]), np.float64))

    @classmethod
    def from_returns(
        cls,
        returns: Iterable[float],
        lower_boundary: float | None = None,
        upper_boundary: float | None = None,
        boundary_scale: float = 1.0,
    ) -> "ReturnLadder":
        """Sort ``returns``; missing boundaries default to the observed extremes.

        ``boundary_scale`` stretches the boundary pair about its midpoint
        (1 leaves it unchanged).
        """
        r = np.sort(np.asarray(list(returns) if not isinstance(returns, np.ndarray) else returns,
                               dtype=np.float64))
        if len(r) < 1:
            raise LadderError("a ladder needs at least one observed return")
        lo = float(r[0]) if lower_boundary is None else float(lower_boundary)
        hi = float(r[-1]) if upper_boundary is None else float(upper_boundary)
        lo, hi = scale_boundaries(lo, hi, boundary_scale)
        return cls(r, lo, hi)

    @property
    def n(self) -> int:
        return len(self.sorted_returns)

    @property
    def interval_count(self) -> int:
        return self.n + 1

    def interval(self, j: int) -> tuple[float, float]:
        """Endpoints of ``I_j`` for ``j`` in ``1..n+1``."""
        if not 1 <= j <= self.n + 1:
            raise IndexError(f"interval index {j} outside 1..{self.n + 1}")
        return float(self.rungs[j - 1]), float(self.rungs[j])

    def summary(self) -> dict:
        return {
            "n": self.n,
            "r0": self.lower_boundary,
            "r1": float(self.sorted_returns[0]),
            "rn": float(self.sorted_returns[-1]),
            "rn1": self.upper_boundary,
        }


def scale_boundaries(lo: float, hi: float, scale: float) -> tuple[float, float]:
    if not (math.isfinite(scale) and scale >= 1.0):
        raise LadderError(f"boundary_scale must be >= 1, got {scale!r}")
    if scale == 1.0:
        return lo, hi
    mid = 0.5 * (lo + hi)
    return mid - scale * (mid - lo), mid + scale * (hi - mid)


@dataclass(frozen=True)
class WindowPolicy:
    """Which dates feed the ladder rungs and which define its boundaries.

    ``sampling_window`` selects the prices whose returns become
    ``r(1)..r(n)``; the extreme returns over ``boundary_window`` become
    ``r(0)`` and ``r(n+1)`` unless ``boundary_override`` is given. Window
    bounds of ``None`` are open. ``boundary_scale`` widens the resulting
    boundaries about their midpoint.
    """

    sampling_window: tuple[dt.date | None, dt.date | None] = (None, None)
    boundary_window: tuple[dt.date | None, dt.date | None] | None = None
    boundary_override: tuple[float, float] | None = None
    boundary_scale: float = 1.0

    def __post_init__(self):
        if self.boundary_override is not None:
            lo, hi = self.boundary_override
            if not lo <= hi:
                raise LadderError(f"boundary override must satisfy r0 <= rn1, got {self.boundary_override}")
            return
        if self.boundary_window is None:
            return
        (s0, s1), (b0, b1) = self.sampling_window, self.boundary_window
        starts_ok = b0 is None or (s0 is not None and b0 <= s0)
        ends_ok = b1 is None or (s1 is not None and s1 <= b1)
        if not (starts_ok and ends_ok):
            raise LadderError(
                f"boundary window {self.boundary_window} must contain sampling window {self.sampling_window}"
            )

    @classmethod
    def single_window(cls, start: dt.date | None = None, end: dt.date | None = None) -> "WindowPolicy":
        return cls(sampling_window=(start, end))


def build_ladder(series: PriceSeries, policy: WindowPolicy | None = None) -> ReturnLadder:
    """Rank the sampled log returns and attach boundary returns per ``policy``."""
    policy = policy or WindowPolicy()
    sampled = log_returns(series.between(*policy.sampling_window))
    if policy.boundary_override is not None:
        lo, hi = policy.boundary_override
        if lo > sampled.min() or hi < sampled.max():
            raise LadderError(
                f"boundary override ({lo!r}, {hi!r}) lies inside the observed return range "
                f"[{sampled.min()!r}, {sampled.max()!r}]"
            )
    else:
        window = policy.boundary_window or policy.sampling_window
        bound_returns = log_returns(series.between(*window))
        lo, hi = float(bound_returns.min()), float(bound_returns.max())
    return ReturnLadder.from_returns(sampled, lo, hi, policy.boundary_scale)


def write_ladder_csv(ladder: ReturnLadder, out: IO[str]) -> None:
    """Audit dump: one row per rung, boundaries tagged ``r0`` / ``rn1``."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["rank", "tag", "value"])
    w.writerow([0, "r0", repr(ladder.lower_boundary)])
    for k, v in enumerate(ladder.sorted_returns, start=1):
        w.writerow([k, "r", repr(float(v))])
    w.writerow([ladder.n + 1, "rn1", repr(ladder.upper_boundary)])
