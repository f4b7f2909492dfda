import io

import pytest

from npi_asian import (
    GbmParams,
    OrderingSource,
    PriceInterval,
    StudyRecord,
    SweepSpec,
    ValidationError,
    compute_metrics,
    run_sweep,
)
from npi_asian.evaluation import aggregate_raw, read_raw_csv, write_raw_csv, write_sweep_csv


def test_single_covered_record():
    m = compute_metrics([StudyRecord(PriceInterval(2, 4), 3)])
    assert (m.coverage, m.accuracy, m.precision, m.record_count) == (1.0, 0.0, 2.0, 1)


def test_single_uncovered_record():
    m = compute_metrics([StudyRecord(PriceInterval(2, 4), 5)])
    assert (m.coverage, m.accuracy, m.precision) == (0.0, 2.0, 2.0)


def test_two_records():
    m = compute_metrics([StudyRecord(PriceInterval(2, 4), 3), StudyRecord(PriceInterval(0, 1), 2)])
    assert (m.coverage, m.accuracy, m.precision) == (0.5, 0.75, 1.5)


def test_zero_interval_zero_benchmark_is_covered():
    m = compute_metrics([StudyRecord(PriceInterval(0, 0), 0)])
    assert (m.coverage, m.accuracy, m.precision) == (1.0, 0.0, 0.0)


def test_endpoints_count_as_covered():
    recs = [StudyRecord(PriceInterval(2, 4), 2), StudyRecord(PriceInterval(2, 4), 4)]
    assert compute_metrics(recs).coverage == 1.0


def test_empty_input_rejected():
    with pytest.raises(ValidationError):
        compute_metrics([])


def test_adding_covered_record_never_lowers_covered_count():
    base = [StudyRecord(PriceInterval(2, 4), 5), StudyRecord(PriceInterval(0, 1), 0.5)]
    before = compute_metrics(base)
    after = compute_metrics(base + [StudyRecord(PriceInterval(1, 3), 2)])
    assert after.coverage * after.record_count >= before.coverage * before.record_count + 1


SMALL = dict(paths_per_point=12, source=OrderingSource.monte_carlo(200))


def test_sigma_zero_sweep_is_exact():
    res = run_sweep(SweepSpec((0.0,), **SMALL), seed=3)
    (sigma, m), = res.rows
    assert sigma == 0.0
    assert m.coverage == 1.0
    assert m.accuracy < 1e-9
    assert m.precision < 1e-9


def test_sweep_thread_invariance():
    spec = SweepSpec((0.01, 0.05), boundary_scale=5, **SMALL)
    a = run_sweep(spec, seed=9, threads=1)
    b = run_sweep(spec, seed=9, threads=4)
    assert a == b


def test_sweep_common_paths_across_grid():
    a = run_sweep(SweepSpec((0.02,), **SMALL), seed=2)
    b = run_sweep(SweepSpec((0.05, 0.02), **SMALL), seed=2)
    assert a.records == b.records[12:]


def test_raw_records_reaggregate():
    res = run_sweep(SweepSpec((0.01, 0.03), boundary_scale=3, **SMALL), seed=1)
    buf = io.StringIO()
    write_raw_csv(res.records, buf)
    buf.seek(0)
    assert aggregate_raw(read_raw_csv(buf)) == res.rows


def test_sweep_csv_layout():
    res = run_sweep(SweepSpec((0.01,), **SMALL), seed=1)
    buf = io.StringIO()
    write_sweep_csv(res.rows, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "sigma,coverage,accuracy,precision,paths"
    assert lines[1].startswith("0.01,") and lines[1].endswith(",12")


def test_spec_validation():
    with pytest.raises(ValidationError):
        SweepSpec(())
    with pytest.raises(ValidationError):
        SweepSpec((-0.1,))
