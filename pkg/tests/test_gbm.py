import io
import math

import numpy as np
import pytest

from npi_asian import (
    GbmParams,
    OptionContract,
    OrderingSource,
    PriceSeries,
    ReturnLadder,
    ValidationError,
    benchmark_price,
    log_returns,
    price_interval,
    simulate_path,
)
from npi_asian._rng import stream
from npi_asian.gbm import simulate_log_path, write_paths_csv
from npi_asian.pricing import AveragingConvention


def test_flat_path_without_drift_or_volatility():
    path = simulate_path(GbmParams(drift=0.0, volatility=0.0, initial_price=50.0), stream(1))
    assert np.all(path.prices == 50.0)
    assert len(path.history) == 101 and len(path.future) == 11


def test_deterministic_drift():
    p = GbmParams(drift=0.02, volatility=0.0, initial_price=50.0, total_steps=10, history_steps=5)
    path = simulate_path(p, stream(1))
    assert path.prices[-1] == pytest.approx(50 * math.exp(0.2), rel=1e-13)
    assert path.history.prices[-1] == path.future.prices[0]


def test_log_return_mean_law_of_large_numbers():
    mu, sigma, steps = 0.02, 0.02, 100_000
    p = GbmParams(drift=mu, volatility=sigma, total_steps=steps, history_steps=1)
    log_p = simulate_log_path(p, stream(17))
    mean = np.mean(np.diff(log_p))
    assert abs(mean - (mu - sigma**2 / 2)) < 3 * sigma / math.sqrt(steps)


def test_same_seed_same_path():
    p = GbmParams(volatility=0.05)
    a = simulate_path(p, stream(4, 2, 0))
    b = simulate_path(p, stream(4, 2, 0))
    assert np.array_equal(a.prices, b.prices)


def test_param_validation():
    with pytest.raises(ValidationError):
        GbmParams(history_steps=110, total_steps=110)
    with pytest.raises(ValidationError):
        GbmParams(volatility=-0.1)


def test_benchmark_flat_atm_is_zero():
    future = PriceSeries.from_prices([50.0] * 11)
    assert benchmark_price(future, OptionContract("call", 50.0, 10, 50.0)) == 0.0


def test_benchmark_single_step():
    future = PriceSeries.from_prices([50.0, 55.0])
    assert benchmark_price(future, OptionContract("call", 50.0, 1, 50.0)) == 5.0
    inc = benchmark_price(future, OptionContract("call", 50.0, 1, 50.0), AveragingConvention(True))
    assert inc == 2.5


def test_benchmark_random_path_hand_average():
    path = simulate_path(GbmParams(volatility=0.03), stream(8))
    future = path.future.prices.tolist()
    for kind in ("call", "put"):
        K = future[0] * 1.05
        total = 0.0
        for x in future[1:]:
            total += x
        avg = total / 10
        hand = max(avg - K, 0.0) if kind == "call" else max(K - avg, 0.0)
        got = benchmark_price(path.future, OptionContract(kind, K, 10, future[0]))
        assert got == pytest.approx(hand, rel=1e-13, abs=1e-12)


def test_benchmark_horizon_mismatch():
    with pytest.raises(ValidationError):
        benchmark_price(PriceSeries.from_prices([1.0, 2.0, 3.0]), OptionContract("call", 1.0, 5, 1.0))


def test_deterministic_path_is_bracketed():
    path = simulate_path(GbmParams(drift=0.02, volatility=0.0), stream(0))
    lad = ReturnLadder.from_returns(log_returns(path.history))
    c = OptionContract("call", 50.0, 10, path.history.last_close)
    npi = price_interval(c, lad, OrderingSource.monte_carlo(500, 1))
    bench = benchmark_price(path.future, c)
    assert npi.width < 1e-9 * bench
    assert npi.max_buying == pytest.approx(bench, rel=1e-12)


def test_paths_csv():
    p = GbmParams(total_steps=3, history_steps=1)
    buf = io.StringIO()
    write_paths_csv([simulate_path(p, stream(0, k, 0)) for k in range(2)], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "path_id,step,price"
    assert len(lines) == 1 + 2 * 4
    assert lines[1] == "0,0,50"
