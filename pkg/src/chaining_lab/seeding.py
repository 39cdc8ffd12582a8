"""Seed derivation and deterministic replication.

Child seeds come from a SplitMix64 step: ``mix(seed + (index + 1) * GOLDEN)``.
The finalizer is a bijection of 64-bit words and the counter step is odd, so
for a fixed master seed distinct indices below 2**64 give distinct children.
Streams are fed to numpy's PCG64.
"""
from concurrent.futures import ThreadPoolExecutor

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# reserved stream indices for non-replication draws
METRIC_STREAM = 0xC1A5_0001
HELDOUT_STREAM = 0xC1A5_0002
WIDTH_STREAM = 0xC1A5_0003
CLASS_STREAM = 0xC1A5_0004


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive_stream(master_seed: int, index: int) -> int:
    """64-bit child seed for stream ``index`` of ``master_seed``."""
    if not 0 <= master_seed <= MASK64:
        raise ValueError("master seed must fit in 64 unsigned bits")
    if index < 0:
        raise ValueError("stream index must be nonnegative")
    return _mix((master_seed + (index + 1) * GOLDEN) & MASK64)


def derive_streams(master_seed: int, indices) -> np.ndarray:
    """Vectorised :func:`derive_stream` over an integer array of indices."""
    idx = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(master_seed) + (idx + np.uint64(1)) * np.uint64(GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def rng_for(master_seed: int, *path: int) -> np.random.Generator:
    """Generator for the stream reached by deriving along ``path``."""
    seed = master_seed
    for index in path:
        seed = derive_stream(seed, index)
    return np.random.Generator(np.random.PCG64(seed))


def replicate(fn, master_seed: int, count: int, threads: int = 1) -> list:
    """Run ``fn(index, rng)`` for ``index in range(count)``, results in index order.

    Each replication gets ``rng_for(master_seed, index)``, so the output does
    not depend on ``threads``.
    """
    def one(index):
        return fn(index, rng_for(master_seed, index))

    if threads <= 1 or count <= 1:
        return [one(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(count)))
