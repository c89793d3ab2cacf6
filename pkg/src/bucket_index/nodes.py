"""Node types: D-Buckets (leaves), S-Buckets and Segments (inner nodes).

A slot or routing entry is visible to readers only once its valid flag is
set, and the flag is always written after the contents. Routing entries are
stored as one (pivot, child) tuple per cell so a reader never pairs a pivot
with the wrong child when a freed cell is reused.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .config import HintKind
from .hints import make_hint

MAX_KEY = (1 << 64) - 1
INF = math.inf

# Bytes of the equivalent packed layout (8B keys, 8B values, 8B pointers),
# used for memory-overhead accounting.
KEY_BYTES = 8
VALUE_BYTES = 8
PTR_BYTES = 8
DBUCKET_HEADER = 48   # pivot, count, capacity, hint params, retire epoch
SBUCKET_HEADER = 16   # pivot, count
SEGMENT_HEADER = 56   # pivot, slope, intercept, origin, level, smo count, array ptr


@dataclass(frozen=True)
class LinearModel:
    """predict(k) = slope * (k - origin) + intercept.

    Keys are shifted by `origin` in exact integer arithmetic before the float
    multiply, so 64-bit keys that share high bits stay distinguishable.
    """
    slope: float = 0.0
    intercept: float = 0.0
    origin: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.slope) and math.isfinite(self.intercept)):
            raise ValueError("model parameters must be finite")
        if self.slope < 0:
            raise ValueError("model slope must be non-negative")

    def predict(self, k: int) -> float:
        return self.slope * (k - self.origin) + self.intercept


class DBucket:
    """Leaf bucket of unsorted (key, value) slots addressed through a hint."""

    __slots__ = ("pivot", "capacity", "keys", "vals", "valid", "count",
                 "hint", "hint_lo", "hint_hi", "smo_epoch")
    leaf = True

    def __init__(self, capacity: int, pivot: int, hint_kind: HintKind, hint_hi: int | None = None):
        self.pivot = pivot
        self.capacity = capacity
        self.keys = [0] * capacity
        self.vals = [0] * capacity
        self.valid = bytearray(capacity)
        self.count = 0
        self.hint_lo = pivot
        self.hint_hi = hint_hi if hint_hi is not None else MAX_KEY + 1
        self.hint = make_hint(hint_kind, capacity, self.hint_lo, self.hint_hi)
        self.smo_epoch = None

    def items(self):
        keys, vals, valid = self.keys, self.vals, self.valid
        return [(keys[i], vals[i]) for i in range(self.capacity) if valid[i]]

    def nbytes(self) -> int:
        return (DBUCKET_HEADER + self.capacity * (KEY_BYTES + VALUE_BYTES)
                + (self.capacity + 7) // 8)

    def reclaim(self):
        # Poison: any reader still holding this node fails loudly.
        self.keys = self.vals = self.valid = self.hint = None

    def __repr__(self):
        return f"DBucket(pivot={self.pivot}, count={self.count}/{self.capacity})"


class SBucket:
    """Fixed-capacity bucket of unsorted (pivot, child) routing entries."""

    # `version` is bumped by the writer after every invalidation; a reader
    # whose scan straddled one rescans (see read.locate)
    __slots__ = ("pivot", "capacity", "entries", "valid", "count", "version")

    def __init__(self, capacity: int, entries=()):
        self.capacity = capacity
        self.version = 0
        self.entries = [None] * capacity
        self.valid = bytearray(capacity)
        self.count = 0
        for i, entry in enumerate(entries):
            self.entries[i] = entry
            self.valid[i] = 1
        self.count = len(entries)
        self.pivot = min(p for p, _ in entries) if entries else None

    def live(self):
        """Valid (slot, pivot, child) triples in slot order."""
        entries, valid = self.entries, self.valid
        return [(i,) + entries[i] for i in range(self.capacity) if valid[i]]

    def sorted_entries(self):
        while True:
            v = self.version
            entries, valid = self.entries, self.valid
            out = sorted((entries[i] for i in range(self.capacity) if valid[i]),
                         key=lambda e: e[0])
            if self.version == v:
                return out

    @property
    def free(self) -> int:
        return self.capacity - self.count

    def nbytes(self) -> int:
        return SBUCKET_HEADER + self.capacity * (KEY_BYTES + PTR_BYTES) + (self.capacity + 7) // 8

    def reclaim(self):
        self.entries = self.valid = None


class Segment:
    """Inner node: a linear model over a sorted run of S-Buckets."""

    __slots__ = ("pivot", "model", "sbuckets", "level", "smo_count")
    leaf = False

    def __init__(self, model: LinearModel, sbuckets: list, level: int, smo_count: int = 0):
        self.model = model
        self.sbuckets = sbuckets
        self.level = level
        self.smo_count = smo_count
        self.pivot = sbuckets[0].pivot

    def children(self):
        """(pivot, child) pairs in key order."""
        out = []
        for sb in self.sbuckets:
            out.extend(sb.sorted_entries())
        return out

    @property
    def fanout(self) -> int:
        return sum(sb.count for sb in self.sbuckets)

    def nbytes(self) -> int:
        return SEGMENT_HEADER + PTR_BYTES * len(self.sbuckets) + sum(sb.nbytes() for sb in self.sbuckets)

    def reclaim(self):
        for sb in self.sbuckets:
            sb.reclaim()
        self.sbuckets = None
        self.model = None

    def __repr__(self):
        return (f"Segment(pivot={self.pivot}, level={self.level}, "
                f"sbuckets={len(self.sbuckets) if self.sbuckets is not None else None})")


def range_of(pivot: int, successor_pivot=INF):
    """Half-open key range [pivot, successor) covered by a node."""
    return pivot, successor_pivot
