"""
Seeded random streams.

Every stream is numpy's Philox4x64-10 counter-based generator keyed directly
by a 64-bit seed (no SeedSequence hashing), so the stream for a given key is
fixed by the Philox definition alone. Per-instance substreams use the key
``seed XOR splitmix64(index)``.
"""

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(value: int) -> int:
    """One splitmix64 output for the state ``value`` (Steele, Lea, Flood)."""
    z = (value + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def instance_seed(seed: int, index: int) -> int:
    return (int(seed) & MASK64) ^ splitmix64(int(index))


def make_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) & MASK64))


def instance_generator(seed: int, index: int) -> np.random.Generator:
    return make_generator(instance_seed(seed, index))
