"""``npi-asian`` command-line interface.

Exit codes: 0 success, 2 usage/validation, 3 data error, 4 capacity error.
Every command is a pure function of its input files, flags and seed.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import io
import json
import math
import sys
from dataclasses import replace
from typing import Sequence

from . import __version__
from ._rng import RNG_ALGORITHM, THREADS_ENV, default_threads, derive_seed, stream
from .errors import CapacityError, DataError, NPIError, ValidationError
from .evaluation import SweepSpec, run_sweep, write_raw_csv, write_sweep_csv
from .gbm import GbmParams, simulate_path, write_paths_csv
from .market_data import PriceSeries, WindowPolicy, build_ladder, load_price_series
from .orderings import ENUMERATION_CAP, OrderingSource
from .pricing import AveragingConvention, DiscountSpec, OptionContract, price_interval
from .probability import compare_for_trade, payoff_probability

SCHEMA_VERSION = 1
EXIT_USAGE, EXIT_DATA, EXIT_CAPACITY = 2, 3, 4


class StageError(Exception):
    def __init__(self, stage: str, exc: Exception):
        self.stage, self.exc = stage, exc
        super().__init__(f"{stage}: {exc}")


class _Stage:
    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, et, exc, tb):
        if exc is not None and isinstance(exc, (NPIError, ValueError, OSError)) and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


# ---------------------------------------------------------------- arg types

def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _nonneg_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(v) and v >= 0):
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected YYYY-MM-DD, got {text!r}") from None


def _s0(text: str):
    return "last-close" if text == "last-close" else _positive_float(text)


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals or any(not (math.isfinite(v) and v >= 0) for v in vals):
        raise argparse.ArgumentTypeError("expected a non-empty list of non-negative numbers")
    return vals


def _date_list(text: str) -> list[dt.date]:
    return [_date(t.strip()) for t in text.split(",") if t.strip()]


# ---------------------------------------------------------------- output

def _g(x: float):
    """Round to 9 significant digits for stable output."""
    if isinstance(x, float) and math.isfinite(x):
        return float(f"{x:.9g}")
    return x


def _emit(report: dict, fmt: str, out, table: list[dict] | None = None) -> None:
    if fmt == "json":
        out.write(json.dumps(report, indent=2) + "\n")
        return
    rows = table if table is not None else [_flatten(report)]
    w = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)


def _flatten(d: dict, prefix: str = "") -> dict:
    flat = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            for i, x in enumerate(v):
                flat[f"{key}.{i}"] = x
        else:
            flat[key] = v
    return flat


# ---------------------------------------------------------------- shared setup

def _add_data_args(p: argparse.ArgumentParser, suffix: str = "", required: bool = True) -> None:
    p.add_argument(f"--csv{suffix}", required=required, help="price history CSV (header row required)")


def _add_common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("data")
    g.add_argument("--date-col", default="date")
    g.add_argument("--price-col", default="close")
    g.add_argument("--sample-start", type=_date, help="first date of the sampling window")
    g.add_argument("--sample-end", type=_date, help="last date of the sampling window")
    g.add_argument("--boundary-start", type=_date, help="first date of the boundary window")
    g.add_argument("--boundary-end", type=_date, help="last date of the boundary window")
    g.add_argument("--r0", type=float, help="override for the lowest boundary return")
    g.add_argument("--rn1", type=float, help="override for the highest boundary return")
    g.add_argument("--boundary-scale", type=float, default=1.0, help="widen boundaries about their midpoint")
    c = p.add_argument_group("contract")
    c.add_argument("--kind", choices=["call", "put"], default="call")
    c.add_argument("--horizon", type=_positive_int, help="number of future averaging steps")
    c.add_argument("--rate", type=_nonneg_float, default=0.0, help="continuously compounded rate per step")
    c.add_argument("--s0", type=_s0, default="last-close", help="spot price, or 'last-close'")
    c.add_argument("--include-initial", action="store_true", help="average S0 together with the m future prices")
    _add_source(p)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out", help="write the report here instead of stdout")


def _add_source(p: argparse.ArgumentParser) -> None:
    s = p.add_argument_group("orderings")
    s.add_argument("--mode", choices=["mc", "exact"], default="mc")
    s.add_argument("--samples", type=_positive_int, default=10_000)
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--cap", type=_positive_int, default=ENUMERATION_CAP, help="exact enumeration cap")
    s.add_argument("--threads", type=_positive_int, default=None,
                   help=f"worker threads (default ${THREADS_ENV} or 1); never changes results")


def _source(args, seed: int | None = None) -> OrderingSource:
    if args.mode == "exact":
        return OrderingSource.exact(args.cap)
    return OrderingSource.monte_carlo(args.samples, args.seed if seed is None else seed)


def _source_report(args) -> dict:
    rep = {"mode": "exact" if args.mode == "exact" else "monte-carlo"}
    if args.mode == "mc":
        rep.update(samples=args.samples, seed=args.seed, rng=RNG_ALGORITHM)
    return rep


def _policy(args, end: dt.date | None = None) -> WindowPolicy:
    s_end = args.sample_end if end is None else min(end, args.sample_end or end)
    override = None
    if args.r0 is not None or args.rn1 is not None:
        if args.r0 is None or args.rn1 is None:
            raise ValidationError("--r0 and --rn1 must be given together")
        override = (args.r0, args.rn1)
    bwin = None
    if args.boundary_start is not None or args.boundary_end is not None:
        b_end = args.boundary_end if end is None else min(end, args.boundary_end or end)
        bwin = (args.boundary_start, b_end)
    return WindowPolicy((args.sample_start, s_end), bwin, override, args.boundary_scale)


def _load(path: str, args) -> PriceSeries:
    with _Stage("parse"):
        with open(path, "rb") as fh:
            return load_price_series(fh, args.date_col, args.price_col)


def _contract(args, series: PriceSeries, strike: float) -> OptionContract:
    s0 = series.last_close if args.s0 == "last-close" else args.s0
    return OptionContract(args.kind, strike, args.horizon, s0, DiscountSpec(args.rate))


def _ladder_report(ladder, series: PriceSeries) -> dict:
    return {k: _g(v) for k, v in ladder.summary().items()} | {
        "first_date": series.first_date.isoformat(),
        "last_date": series.last_date.isoformat(),
    }


def _contract_report(c: OptionContract, args) -> dict:
    return {
        "kind": c.kind,
        "strike": _g(c.strike),
        "horizon": c.horizon,
        "rate_per_step": _g(c.discount.rate_per_step),
        "initial_price": _g(c.initial_price),
        "include_initial": bool(args.include_initial),
    }


# ---------------------------------------------------------------- commands

def cmd_price(args, out) -> int:
    series = _load(args.csv, args)
    with _Stage("ladder"):
        ladder = build_ladder(series, _policy(args))
    with _Stage("price"):
        contract = _contract(args, series, args.strike)
        conv = AveragingConvention(args.include_initial)
        res = price_interval(contract, ladder, _source(args), conv, args.threads)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "price",
        "contract": _contract_report(contract, args),
        "ladder": _ladder_report(ladder, series),
        "source": _source_report(args),
        "result": {
            "max_buying": _g(res.max_buying),
            "min_selling": _g(res.min_selling),
            "standard_error": [_g(e) for e in res.standard_error],
        },
    }
    _emit(report, args.format, out)
    return 0


def cmd_prob(args, out) -> int:
    series = _load(args.csv, args)
    with _Stage("ladder"):
        ladder = build_ladder(series, _policy(args))
    with _Stage("prob"):
        contract = _contract(args, series, args.strike)
        conv = AveragingConvention(args.include_initial)
        res = payoff_probability(contract, ladder, _source(args), conv, args.threads)
    result = {
        "lower": _g(res.lower),
        "upper": _g(res.upper),
        "standard_error": [_g(e) for e in res.standard_error],
    }
    if res.exact is not None:
        result["exact"] = [str(f) for f in res.exact]
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "prob",
        "contract": _contract_report(contract, args),
        "ladder": _ladder_report(ladder, series),
        "source": _source_report(args),
        "result": result,
    }
    _emit(report, args.format, out)
    return 0


def _compare_strikes(args, s0_a: float, s0_b: float) -> tuple[float, float]:
    if args.strike_ratio is not None:
        return args.strike_ratio * s0_a, args.strike_ratio * s0_b
    k_a = args.strike_a if args.strike_a is not None else args.strike
    k_b = args.strike_b if args.strike_b is not None else args.strike
    if k_a is None or k_b is None:
        raise ValidationError("give --strike, --strike-a/--strike-b, or --strike-ratio")
    return k_a, k_b


def cmd_compare(args, out) -> int:
    series_a, series_b = _load(args.csv_a, args), _load(args.csv_b, args)
    common = sorted(set(series_a.dates.tolist()) & set(series_b.dates.tolist()))
    if args.dates:
        missing = [d for d in args.dates if d not in common]
        if missing:
            raise StageError("parse", DataError(f"as-of dates not present in both series: {missing}"))
        as_of = args.dates
    else:
        as_of = common[-args.last:]
    if not as_of:
        raise StageError("parse", DataError("the two series share no dates"))
    conv = AveragingConvention(args.include_initial)
    rows, table = [], []
    for k, day in enumerate(as_of):
        if args.horizon is not None:
            horizon = args.horizon
        elif args.expiry is not None:
            horizon = (args.expiry - day).days
        else:
            raise ValidationError("give --horizon or --expiry")
        if horizon < 1:
            raise ValidationError(f"horizon on {day} is {horizon}; it must be at least 1")
        with _Stage("ladder"):
            hist_a, hist_b = series_a.between(None, day), series_b.between(None, day)
            lad_a, lad_b = build_ladder(hist_a, _policy(args, day)), build_ladder(hist_b, _policy(args, day))
        with _Stage("prob"):
            s0_a = hist_a.last_close if args.s0 == "last-close" else args.s0
            s0_b = hist_b.last_close if args.s0 == "last-close" else args.s0
            k_a, k_b = _compare_strikes(args, s0_a, s0_b)
            disc = DiscountSpec(args.rate)
            # Both assets share the row's stream so identical inputs give identical intervals.
            src = _source(args, derive_seed(args.seed, k))
            pa = payoff_probability(OptionContract(args.kind, k_a, horizon, s0_a, disc), lad_a, src, conv, args.threads)
            pb = payoff_probability(OptionContract(args.kind, k_b, horizon, s0_b, disc), lad_b, src, conv, args.threads)
            decision = compare_for_trade(pa, pb)
        row = {
            "date": day.isoformat(),
            "horizon": horizon,
            "upper_a": _g(pa.upper),
            "lower_a": _g(pa.lower),
            "upper_b": _g(pb.upper),
            "lower_b": _g(pb.lower),
            "speculator_choice": decision.speculator_choice,
            "hedger_choice": decision.hedger_choice,
        }
        table.append(row)
        rows.append(row | {"strike_a": _g(k_a), "strike_b": _g(k_b)})
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "compare",
        "kind": args.kind,
        "source": _source_report(args),
        "rows": rows,
    }
    _emit(report, args.format, out, table)
    return 0


def _gbm_params(args, sigma: float) -> GbmParams:
    return GbmParams(args.drift, sigma, args.initial_price, args.steps, args.history)


def cmd_simulate(args, out) -> int:
    with _Stage("simulate"):
        params = _gbm_params(args, args.vol)
        paths = [simulate_path(params, stream(args.seed, pid, 0)) for pid in range(args.paths)]
    write_paths_csv(paths, out)
    return 0


def cmd_sweep(args, out) -> int:
    with _Stage("sweep"):
        spec = SweepSpec(
            volatility_grid=tuple(args.vols),
            paths_per_point=args.paths,
            gbm=_gbm_params(args, args.vols[0]),
            kind=args.kind,
            strike=args.strike,
            discount=DiscountSpec(args.rate),
            source=_source(args),
            convention=AveragingConvention(args.include_initial),
            boundary_scale=args.boundary_scale,
        )
        result = run_sweep(spec, args.seed, args.threads)
    if args.raw:
        with open(args.raw, "w", newline="", encoding="utf-8") as fh:
            write_raw_csv(result.records, fh)
    if args.format == "json":
        report = {
            "schema_version": SCHEMA_VERSION,
            "command": "sweep",
            "source": _source_report(args),
            "boundary_scale": _g(args.boundary_scale),
            "rows": [
                {"sigma": _g(s), "coverage": _g(m.coverage), "accuracy": _g(m.accuracy),
                 "precision": _g(m.precision), "paths": m.record_count}
                for s, m in result.rows
            ],
        }
        _emit(report, "json", out)
    else:
        write_sweep_csv(result.rows, out)
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="npi-asian", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="maximum buying / minimum selling price")
    _add_data_args(p)
    p.add_argument("--strike", type=_positive_float, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_price, needs_horizon=True)

    p = sub.add_parser("prob", help="lower / upper probability of a positive payoff")
    _add_data_args(p)
    p.add_argument("--strike", type=_positive_float, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_prob, needs_horizon=True)

    p = sub.add_parser("compare", help="speculator / hedger choice between two underlyings")
    _add_data_args(p, "-a")
    _add_data_args(p, "-b")
    p.add_argument("--strike", type=_positive_float)
    p.add_argument("--strike-a", type=_positive_float)
    p.add_argument("--strike-b", type=_positive_float)
    p.add_argument("--strike-ratio", type=_positive_float, help="strike as a multiple of each asset's S0")
    p.add_argument("--expiry", type=_date, help="horizon = calendar days from each as-of date to expiry")
    p.add_argument("--dates", type=_date_list, help="comma-separated as-of dates")
    p.add_argument("--last", type=_positive_int, default=1, help="use the last N common dates")
    _add_common(p)
    p.set_defaults(func=cmd_compare, needs_horizon=False)

    for name, func, helptext in (("simulate", cmd_simulate, "dump simulated GBM paths"),
                                 ("sweep", cmd_sweep, "coverage/accuracy/precision volatility sweep")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--drift", type=float, default=0.02, help="per-step drift")
        p.add_argument("--initial-price", type=_positive_float, default=50.0)
        p.add_argument("--steps", type=_positive_int, default=110)
        p.add_argument("--history", type=_positive_int, default=100)
        p.add_argument("--paths", type=_positive_int, default=100)
        p.add_argument("--seed", type=_seed, default=0)
        p.add_argument("--out")
        if name == "simulate":
            p.add_argument("--vol", type=_nonneg_float, default=0.02, help="per-step volatility")
        else:
            p.add_argument("--vols", type=_float_list, default=[0.005, 0.02, 0.05, 0.10])
            p.add_argument("--kind", choices=["call", "put"], default="call")
            p.add_argument("--strike", type=_positive_float, default=50.0)
            p.add_argument("--rate", type=_nonneg_float, default=0.0)
            p.add_argument("--include-initial", action="store_true")
            p.add_argument("--boundary-scale", type=float, default=1.0)
            p.add_argument("--raw", help="also write per-path records to this CSV")
            p.add_argument("--format", choices=["json", "csv"], default="csv")
            s = p.add_argument_group("orderings")
            s.add_argument("--mode", choices=["mc", "exact"], default="mc")
            s.add_argument("--samples", type=_positive_int, default=1000)
            s.add_argument("--cap", type=_positive_int, default=ENUMERATION_CAP)
            s.add_argument("--threads", type=_positive_int, default=None)
        p.set_defaults(func=cmd_simulate if name == "simulate" else cmd_sweep, needs_horizon=False)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "needs_horizon", False) and args.horizon is None:
        parser.error("--horizon is required")
    if getattr(args, "threads", None) is None and hasattr(args, "threads"):
        args.threads = default_threads()
    buf = io.StringIO()
    try:
        status = args.func(args, buf)
    except StageError as err:
        exc = err.exc
        code = EXIT_CAPACITY if isinstance(exc, CapacityError) else (
            EXIT_USAGE if isinstance(exc, ValidationError) else EXIT_DATA)
        print(f"npi-asian: {err.stage} failed: {exc}", file=sys.stderr)
        return code
    except ValidationError as exc:
        print(f"npi-asian: invalid arguments: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"npi-asian: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (DataError, OSError) as exc:
        print(f"npi-asian: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
