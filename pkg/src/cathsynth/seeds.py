"""Per-item random streams derived from a master seed.

Each dataset index gets an independent generator seeded by a splitmix64
mix of (master_seed, index), so results do not depend on worker count or
scheduling order.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 scramble step (Steele et al. finalizer)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return (x ^ (x >> 31)) & _MASK


def pair_seed(master_seed: int, index: int) -> int:
    """64-bit stream seed for one dataset item."""
    return splitmix64(splitmix64(master_seed & _MASK) ^ (index & _MASK))


def stream(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(pair_seed(master_seed, index))
