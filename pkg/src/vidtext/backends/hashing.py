"""Seedable integer hashing used by the deterministic backends.

These are the documented rules behind the mock backend's fixtures and the
toy model's tokenizer, so they must never change: FNV-1a (64-bit) for
strings, SplitMix64 as the stream generator, and a 53-bit mantissa mapping
from u64 to floats.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_GOLDEN = 0x9E3779B97F4A7C15


def fnv1a64(text: str) -> int:
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def splitmix64(state: int) -> tuple[int, int]:
    """Advance the SplitMix64 state once; returns (new_state, output)."""
    state = (state + _GOLDEN) & _MASK64
    return state, mix64(state)


def mix64(z: int) -> int:
    """SplitMix64's finalizer; use before reducing a hash to few bits.

    Raw FNV-1a low bits barely change when inputs differ in one trailing
    byte, so anything that takes `hash % small_modulus` must mix first.
    """
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def unit_float(u: int) -> float:
    """Map a u64 to [0, 1) using the top 53 bits."""
    return (u >> 11) * (2.0**-53)


def hash_stream(seed: int, count: int) -> np.ndarray:
    """`count` floats in [-1, 1) from a SplitMix64 stream seeded at `seed`.

    Vectorized over the stream index; bit-identical to advancing splitmix64
    `count` times, independent of numpy's own RNG machinery.
    """
    idx = np.arange(1, count + 1, dtype=np.uint64)
    states = np.uint64(seed & _MASK64) + idx * np.uint64(_GOLDEN)  # wraps mod 2^64
    z = states
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return 2.0 * ((z >> np.uint64(11)).astype(np.float64) * 2.0**-53) - 1.0


def combine(*parts: int) -> int:
    """Order-sensitive mix of integer hash parts into one u64 seed."""
    state = _FNV_OFFSET
    for part in parts:
        state, z = splitmix64((state ^ (part & _MASK64)) & _MASK64)
        state ^= z
    return state & _MASK64
