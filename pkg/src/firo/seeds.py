"""Deterministic seed derivation so every sub-task gets an independent stream."""

from __future__ import annotations

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def derive(seed: int, *parts: int) -> int:
    """Mix a base seed with context integers into a new 63-bit seed."""
    h = (seed ^ _GOLDEN) & _MASK64
    for part in parts:
        h ^= (part + _GOLDEN + ((h << 6) & _MASK64) + (h >> 2)) & _MASK64
        h = (h * 0xBF58476D1CE4E5B9) & _MASK64
        h ^= h >> 31
    return h & 0x7FFFFFFFFFFFFFFF
