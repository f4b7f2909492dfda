import pytest

from npi_asian import PriceSeries, ReturnLadder, load_price_series

# n = 3 observed returns, boundaries -0.04 / 0.04; 10 orderings for m = 2.
FIXTURE_RUNGS = [-0.04, 0.0, 0.01, 0.02, 0.04]

# 5 closes -> n = 4 returns; with m = 3 there are C(7, 3) = 35 orderings.
SMALL_CSV = (
    "date,close\n"
    "2020-03-02,100.0\n"
    "2020-03-03,101.0\n"
    "2020-03-04,99.5\n"
    "2020-03-05,100.8\n"
    "2020-03-06,102.1\n"
)


@pytest.fixture
def fixture_ladder() -> ReturnLadder:
    return ReturnLadder(FIXTURE_RUNGS[1:-1], FIXTURE_RUNGS[0], FIXTURE_RUNGS[-1])


@pytest.fixture
def small_series() -> PriceSeries:
    return load_price_series(SMALL_CSV)


@pytest.fixture
def small_csv(tmp_path):
    path = tmp_path / "small.csv"
    path.write_text(SMALL_CSV)
    return path
