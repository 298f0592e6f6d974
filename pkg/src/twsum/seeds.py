"""Deterministic seed derivation for experiment trials.

Trial ``i`` of a run seeded with ``seed`` uses ``derive_seed(seed, i)``: the
splitmix64 output for state ``seed + (i + 1) * 0x9E3779B97F4A7C15`` (mod 2^64).
Distinct trial indices give well-separated 64-bit seeds, so parallel workers
never share a random stream.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> int:
    z = state & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    return splitmix64((seed + (index + 1) * _GAMMA) & _MASK)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed & _MASK)
