"""Hint functions: key -> preferred slot inside a D-Bucket.

Hints only decide where a probe starts. Lookups and inserts stay correct for
any hint, including a constant one; a bad hint only lengthens probe chains.
"""
from __future__ import annotations

import numpy as np

from .config import HintKind

MASK64 = (1 << 64) - 1

# 64-bit finalizer constants from MurmurHash3 (fmix64).
_M1 = 0xFF51AFD7ED558CCD
_M2 = 0xC4CEB9FE1A85EC53


def mod_hint(k: int, capacity: int) -> int:
    return k % capacity


def mix64(k: int) -> int:
    """Multiply-xorshift mixer over 64-bit integers."""
    k ^= k >> 33
    k = (k * _M1) & MASK64
    k ^= k >> 33
    k = (k * _M2) & MASK64
    k ^= k >> 33
    return k


def mix64_array(keys: np.ndarray) -> np.ndarray:
    """Vectorised `mix64` for uint64 arrays (multiplication wraps mod 2**64)."""
    k = np.asarray(keys, dtype=np.uint64).copy()
    k ^= k >> np.uint64(33)
    k *= np.uint64(_M1)
    k ^= k >> np.uint64(33)
    k *= np.uint64(_M2)
    k ^= k >> np.uint64(33)
    return k


def clmul_hint(k: int, capacity: int) -> int:
    return mix64(k) % capacity


def endpoint_linear_hint(k: int, lo: int, hi: int, capacity: int) -> int:
    """Interpolate `k` between the bucket pivot `lo` and its successor `hi`."""
    if hi <= lo:
        return 0
    slot = capacity * (k - lo) // (hi - lo)
    if slot < 0:
        return 0
    if slot >= capacity:
        return capacity - 1
    return slot


def make_hint(kind: HintKind, capacity: int, lo: int = 0, hi: int = 0):
    """Build the per-bucket hint callable. Endpoint params are frozen at creation
    so that a placed key's probe start never moves."""
    if kind is HintKind.MOD:
        return lambda k: k % capacity
    if kind is HintKind.CLMUL:
        def hint(k):
            k ^= k >> 33
            k = (k * _M1) & MASK64
            k ^= k >> 33
            k = (k * _M2) & MASK64
            return (k ^ (k >> 33)) % capacity
        return hint
    if kind is HintKind.ENDPOINT:
        span = hi - lo
        if span <= 0:
            return lambda k: 0
        last = capacity - 1

        def hint(k):
            slot = capacity * (k - lo) // span
            return 0 if slot < 0 else (last if slot > last else slot)
        return hint
    raise ValueError(f"unknown hint kind {kind!r}")
