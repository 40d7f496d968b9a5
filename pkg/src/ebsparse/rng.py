"""Seed-addressed random streams.

Every random stream in the package is a ``numpy.random.Generator`` backed by
PCG64 and seeded with a 64-bit integer.  Child seeds are derived from a parent
seed and a stream index with the splitmix64 finalizer, so replication ``r`` of
a study always sees the same stream regardless of scheduling.
"""

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(z: int) -> int:
    """Return the splitmix64 finalizer applied to a 64-bit integer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def derive_seed(seed: int, index: int) -> int:
    """Derive the seed of child stream ``index`` from a parent seed.

    ``derive_seed(s, i)`` is a fixed function of ``(s, i)``; distinct indices
    give unrelated 64-bit seeds.
    """
    seed = check_seed(seed)
    index = check_seed(index)
    return splitmix64(splitmix64(seed) ^ ((index + 1) * _GOLDEN & MASK64))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(check_seed(seed)))
