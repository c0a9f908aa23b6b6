"""Seed mixing and numpy generator construction for reproducible batches.

Every random stream in the package is a ``numpy.random.Generator`` over PCG64.
Batches derive per-trial seeds with :func:`mix`, so trial ``i`` is reproducible
on its own and independent of how trials are scheduled.
"""

from __future__ import annotations

import os

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def check_seed(seed: int) -> int:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if seed < 0 or seed > MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def splitmix64(x: int) -> int:
    """SplitMix64 finaliser."""
    z = x & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix(base_seed: int, index: int) -> int:
    """Derive the seed of stream ``index`` from ``base_seed``."""
    base_seed = check_seed(base_seed)
    if index < 0:
        raise ValueError("stream index must be non-negative")
    return splitmix64((base_seed + (index + 1) * GOLDEN_GAMMA) & MASK64)


def placement_seed(base_seed: int, trial: int) -> int:
    return mix(base_seed, 2 * trial)


def stream_seed(base_seed: int, trial: int) -> int:
    """Seed for walk steps / tie permutations of a trial."""
    return mix(base_seed, 2 * trial + 1)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(check_seed(seed)))


def entropy_seed() -> int:
    """Fresh 64-bit seed from OS entropy (``--nondeterministic`` runs)."""
    return int.from_bytes(os.urandom(8), "little")
