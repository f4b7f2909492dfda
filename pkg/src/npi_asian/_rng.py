"""Seeded random streams.

Every stream is a numpy ``Generator`` over the counter-based Philox4x64
bit generator, keyed by ``SeedSequence(seed, spawn_key=key)``. A key names
a unit of work (a sample block, a simulated path), so results depend only
on the seed and the key, never on thread count or scheduling.
"""

from __future__ import annotations

import os

import numpy as np

RNG_ALGORITHM = "philox4x64+seedsequence/v1"
SEED_MAX = 2**64 - 1
THREADS_ENV = "NPI_ASIAN_THREADS"


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *key: int) -> int:
    """A child 64-bit seed for the unit of work named by ``key``."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
