"""Seedable, counter-based random streams.

Every random draw in the package comes from numpy's Philox-4x64 generator.
A stream is identified by a 64-bit ``seed`` and a small integer ``stream``;
the Philox key is ``(stream << 64) | seed``, so distinct streams never
overlap.  Replication ``k`` of a study uses the seed::

    derive_seed(base_seed, k) = base_seed XOR splitmix64(k)

which keeps per-replication randomness independent of scheduling order.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(k: int) -> int:
    """One round of the SplitMix64 output function applied to ``k``."""
    z = (k + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed: int, k: int) -> int:
    return (int(base_seed) & MASK64) ^ splitmix64(int(k))


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Return a Philox generator for ``(seed, stream)``."""
    key = ((int(stream) & MASK64) << 64) | (int(seed) & MASK64)
    return np.random.Generator(np.random.Philox(key=key))
