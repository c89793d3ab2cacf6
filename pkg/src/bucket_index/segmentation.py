"""Greedy corridor segmentation and per-Segment model fitting."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .nodes import LinearModel

# The corridor is narrowed by this much so float rounding in slope * dx can
# never push a point past the requested bound.
_SLACK = 1e-6


@dataclass(frozen=True)
class Cut:
    start: int
    end: int  # exclusive
    model: LinearModel  # predicts the global index of a key

    def __len__(self):
        return self.end - self.start


class Corridor:
    """Shrinking slope interval anchored at (origin_key, origin_rank).

    `admit(k)` feeds the next key (rank = previous rank + 1) and returns False,
    leaving the corridor unchanged, if no line through the anchor keeps every
    admitted key within `error` ranks.
    """

    __slots__ = ("origin_key", "origin_rank", "lo_slope", "hi_slope", "size", "_err")

    def __init__(self, origin_key: int, error: float, origin_rank: int = 0):
        self.origin_key = origin_key
        self.origin_rank = origin_rank
        self.lo_slope = -math.inf
        self.hi_slope = math.inf
        self.size = 1
        self._err = error - _SLACK

    def admit(self, k: int) -> bool:
        dx = k - self.origin_key
        if dx <= 0:
            raise ValueError("keys must be strictly increasing")
        r = self.size
        lo = (r - self._err) / dx
        hi = (r + self._err) / dx
        if lo < self.lo_slope:
            lo = self.lo_slope
        if hi > self.hi_slope:
            hi = self.hi_slope
        if lo > hi:
            return False
        self.lo_slope, self.hi_slope = lo, hi
        self.size = r + 1
        return True

    def admit_all(self, keys) -> bool:
        """Admit every key or none (state is restored on failure)."""
        saved = (self.lo_slope, self.hi_slope, self.size)
        for k in keys:
            if not self.admit(k):
                self.lo_slope, self.hi_slope, self.size = saved
                return False
        return True

    @property
    def slope(self) -> float:
        if self.size == 1:
            return 0.0
        return max(0.0, (self.lo_slope + self.hi_slope) / 2)

    def model(self) -> LinearModel:
        return LinearModel(self.slope, float(self.origin_rank), self.origin_key)


def greedy_corridor(keys, error: float) -> list[Cut]:
    """One left-to-right pass; a cut closes when the slope interval empties."""
    n = len(keys)
    if n == 0:
        return []
    if error < 1:
        raise ValueError("corridor error must be >= 1")
    err = error - _SLACK
    cuts = []
    s = 0
    ks = keys[0]
    lo, hi = -math.inf, math.inf
    for i in range(1, n):
        k = keys[i]
        dx = k - ks
        if dx <= 0:
            raise ValueError("keys must be strictly increasing")
        r = i - s
        l = (r - err) / dx
        h = (r + err) / dx
        if l < lo:
            l = lo
        if h > hi:
            h = hi
        if l > h:
            cuts.append(_close(s, i, ks, lo, hi))
            s, ks = i, k
            lo, hi = -math.inf, math.inf
        else:
            lo, hi = l, h
    cuts.append(_close(s, n, ks, lo, hi))
    return cuts


def _close(s, end, ks, lo, hi) -> Cut:
    slope = 0.0 if end - s == 1 else max(0.0, (lo + hi) / 2)
    return Cut(s, end, LinearModel(slope, float(s), ks))


def is_single_cut(keys, error: float) -> bool:
    return len(greedy_corridor(keys, error)) <= 1


def _exact_fit(xs, ys):
    """Least squares y = a*x + b, solved in exact integer arithmetic."""
    n = len(xs)
    sx = sum(xs)
    sy = sum(ys)
    sxx = sum(x * x for x in xs)
    sxy = sum(x * y for x, y in zip(xs, ys))
    den = n * sxx - sx * sx
    if den == 0:
        return 0.0, sy / n
    num = n * sxy - sx * sy
    if num <= 0:
        return 0.0, sy / n
    # int / int is correctly rounded, so collinear data fits exactly.
    return num / den, (sy * sxx - sx * sxy) / den


def fit_segment_model(pivots, sbucket_of) -> LinearModel:
    """Fit pivot -> S-Bucket index; slope clamped to be non-negative."""
    if not pivots:
        return LinearModel()
    origin = pivots[0]
    slope, intercept = _exact_fit([p - origin for p in pivots], list(sbucket_of))
    return LinearModel(slope, intercept, origin)


def model_predict_bucket(model: LinearModel, k: int, n_buckets: int) -> int:
    p = model.slope * (k - model.origin) + model.intercept
    if p < 1:
        return 0
    if p >= n_buckets:
        return n_buckets - 1
    return int(p)


def avg_group_error(keys, group_size: int) -> float:
    """Mean |m(k_i) - i| / group_size for the least-squares key -> rank model.

    Predicting the group (bucket) a key falls into instead of its exact
    position divides the error by the group size.
    """
    if group_size < 1:
        raise ValueError("group size must be >= 1")
    if not keys:
        raise ValueError("keys must be non-empty")
    origin = keys[0]
    xs = [k - origin for k in keys]
    slope, intercept = _exact_fit(xs, range(len(keys)))
    total = sum(abs(slope * x + intercept - i) for i, x in enumerate(xs))
    return total / len(keys) / group_size
