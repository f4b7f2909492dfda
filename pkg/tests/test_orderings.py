import io
import math
from collections import Counter
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from npi_asian import (
    CapacityError,
    OrderingAssignment,
    OrderingSource,
    ReturnLadder,
    aggregate_bounds,
    enumerate_orderings,
    ordering_count,
    sample_ordering,
)
from npi_asian._rng import stream
from npi_asian.orderings import (
    enumerate_arrangements,
    sample_blocks,
    sample_interval_indices,
    write_orderings_csv,
)

from .oracles import multiset_frequencies, sequence_probabilities


def brute_interleavings(n, m):
    """Sorted interval multisets read off every m-subset of n+m positions."""
    out = []
    for pos in combinations(range(n + m), m):
        out.append(tuple(p - k + 1 for k, p in enumerate(pos)))
    return out


@pytest.mark.parametrize("n, m, expected", [(2, 2, 6), (3, 2, 10), (1, 1, 2), (4, 3, 35)])
def test_ordering_count_small(n, m, expected):
    assert ordering_count(n, m) == expected


def test_ordering_count_large_is_exact():
    # arbitrary-precision product oracle: 101*...*110 / 10!
    assert ordering_count(100, 10) == math.prod(range(101, 111)) // math.factorial(10) == 46897636623981
    assert ordering_count(1000, 500) == math.comb(1500, 500)


def test_enumerate_one_one():
    assert [o.interval_index for o in enumerate_orderings(1, 1)] == [(1,), (2,)]


@pytest.mark.parametrize("n, m", [(2, 2), (3, 2), (4, 3), (5, 1)])
def test_enumeration_matches_interleavings(n, m):
    got = [o.interval_index for o in enumerate_orderings(n, m)]
    assert len(got) == ordering_count(n, m)
    assert got == brute_interleavings(n, m)  # same set, same lexicographic order
    assert len(set(got)) == len(got)


def test_enumeration_positions_roundtrip():
    for o in enumerate_orderings(3, 2):
        assert len(set(o.positions())) == 2
        assert all(1 <= p <= 5 for p in o.positions())


def test_enumeration_cap():
    with pytest.raises(CapacityError):
        list(enumerate_orderings(100, 10))
    with pytest.raises(CapacityError):
        list(enumerate_orderings(3, 2, cap=9))


def test_arrangement_weights_match_sequential_oracle():
    n, m = 3, 3
    probs = sequence_probabilities(n, m)
    denom = ordering_count(n, m) * math.factorial(m)
    seen = {}
    for idx, w in enumerate_arrangements(n, m, chunk=7):
        for row, wt in zip(idx.tolist(), w.tolist()):
            seen[tuple(row)] = Fraction(wt, denom)
    assert seen == probs
    assert sum(seen.values()) == 1


def test_oracle_multisets_uniform():
    freqs = multiset_frequencies(2, 2)
    assert len(freqs) == 6 and set(freqs.values()) == {Fraction(1, 6)}


def test_sample_two_two_uniform():
    counts = Counter()
    src = OrderingSource.monte_carlo(600_000, seed=11)
    for block in sample_blocks(2, 2, src, lambda idx: np.sort(idx, axis=1)):
        counts.update(map(tuple, block.tolist()))
    assert set(counts) == {o.interval_index for o in enumerate_orderings(2, 2)}
    for key, c in counts.items():
        assert abs(c / 600_000 - 1 / 6) < 0.005, key


def test_sample_one_one_symmetric():
    idx = sample_interval_indices(1, 1, stream(5), 100_000)
    assert abs(np.mean(idx == 1) - 0.5) < 0.01


def test_sampling_exchangeable_across_steps():
    # P(step t in I_j) is the same for all t; exact value is 1/(n+1).
    n, m = 3, 4
    idx = sample_interval_indices(n, m, stream(2), 200_000)
    for j in range(1, n + 2):
        freq = np.mean(idx == j, axis=0)
        assert np.all(np.abs(freq - 1 / (n + 1)) < 0.006), (j, freq)


def test_sampling_matches_sequential_probabilities():
    n, m = 2, 2
    idx = sample_interval_indices(n, m, stream(9), 400_000)
    counts = Counter(map(tuple, idx.tolist()))
    for seq, p in sequence_probabilities(n, m).items():
        assert abs(counts[seq] / 400_000 - float(p)) < 0.004, seq


def test_fixed_seed_is_deterministic():
    a = [sample_ordering(5, 3, stream(42)) for _ in range(3)]
    b = [sample_ordering(5, 3, stream(42)) for _ in range(3)]
    assert a == b
    x = sample_interval_indices(10, 4, stream(1, 3), 50)
    y = sample_interval_indices(10, 4, stream(1, 3), 50)
    assert np.array_equal(x, y)


def test_blocks_independent_of_threads():
    src = OrderingSource.monte_carlo(20_000, seed=3)
    one = np.concatenate(sample_blocks(6, 3, src, lambda i: i, threads=1))
    many = np.concatenate(sample_blocks(6, 3, src, lambda i: i, threads=8))
    assert one.shape == (20_000, 3)
    assert np.array_equal(one, many)


LADDER = ReturnLadder([0.01, 0.02], -0.05, 0.05)


def test_aggregate_both_in_first_interval():
    b = aggregate_bounds(OrderingAssignment((1, 1)), LADDER)
    assert b.lower.tolist() == pytest.approx([-0.05, -0.05])
    assert b.upper.tolist() == pytest.approx([0.01, 0.01])


def test_aggregate_first_and_third():
    b = aggregate_bounds(OrderingAssignment((1, 3)), LADDER)
    assert b.lower.tolist() == pytest.approx([-0.05, -0.015])
    assert b.upper.tolist() == pytest.approx([0.01, 0.03])


def test_aggregate_zero_width_ladder():
    lad = ReturnLadder([0.003] * 4, 0.003, 0.003)
    for o in enumerate_orderings(4, 3):
        b = aggregate_bounds(o, lad)
        assert np.allclose(b.lower, 0.003, rtol=0, atol=1e-18)
        assert np.array_equal(b.lower, b.upper)


def test_aggregate_index_out_of_range():
    with pytest.raises(IndexError):
        aggregate_bounds(OrderingAssignment((1, 4)), LADDER)


def test_enumerated_average_matches_monte_carlo():
    lad = ReturnLadder([-0.01, 0.0, 0.015], -0.03, 0.04)
    n, m = 3, 3
    probs = sequence_probabilities(n, m)
    exact_lo = sum(float(p) * aggregate_bounds(OrderingAssignment(s), lad).lower for s, p in probs.items())
    idx = sample_interval_indices(n, m, stream(21), 100_000)
    cum = np.cumsum(lad.rungs[idx - 1], axis=1) / np.arange(1, m + 1)
    np.testing.assert_allclose(cum.mean(axis=0), exact_lo, atol=3e-4)


def test_orderings_csv_dump():
    buf = io.StringIO()
    write_orderings_csv(enumerate_orderings(1, 2), buf)
    assert buf.getvalue().splitlines() == ["step_1,step_2", "1,1", "1,2", "2,2"]
