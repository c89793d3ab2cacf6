"""Bottom-up bulk load and level construction."""
from __future__ import annotations

import math

from .nodes import MAX_KEY, DBucket, SBucket, Segment
from .segmentation import fit_segment_model, greedy_corridor


def make_segment(entries, cfg, level, smo_count=0) -> Segment:
    """Pack sorted (pivot, child) entries into ceil(n / (f * C_s)) S-Buckets.

    Entries are spread evenly, so no S-Bucket holds more than
    ceil(f * C_s) <= C_s of them, then the model is fitted to the result.
    """
    n = len(entries)
    per = cfg.sbucket_fill
    nb = min(n, max(1, math.ceil(n / per - 1e-9)))
    cap = cfg.sbucket_capacity
    sbuckets = []
    sbucket_of = []
    for b in range(nb):
        lo = b * n // nb
        hi = (b + 1) * n // nb
        sbuckets.append(SBucket(cap, entries[lo:hi]))
        sbucket_of.extend([b] * (hi - lo))
    model = fit_segment_model([p for p, _ in entries], sbucket_of)
    return Segment(model, sbuckets, level, smo_count)


def build_level(entries, cfg, level=1, smo_count=0) -> list[Segment]:
    """One Segment per corridor cluster of the entry pivots."""
    if not entries:
        return []
    cuts = greedy_corridor([p for p, _ in entries], cfg.corridor_error)
    return [make_segment(entries[c.start:c.end], cfg, level, smo_count) for c in cuts]


def build_upward(entries, cfg, level, until_single=True):
    """Stack levels above `entries` (nodes at `level - 1`) until one remains."""
    while True:
        segs = build_level(entries, cfg, level)
        entries = [(s.pivot, s) for s in segs]
        if len(entries) == 1 or not until_single:
            return entries
        level += 1


def build_leaves(pairs, cfg, counters=None) -> list[DBucket]:
    """Cut sorted pairs into runs of floor(C_d * f), one D-Bucket per run."""
    per = cfg.dbucket_fill
    cap = cfg.dbucket_capacity
    kind = cfg.hint_kind
    n = len(pairs)
    buckets = []
    reads = 0
    for lo in range(0, n, per):
        hi = min(lo + per, n)
        if hi < n:
            succ = pairs[hi][0]
        else:
            last = pairs[hi - 1][0]
            succ = last + 1 if hi - lo > 1 else MAX_KEY + 1
        b = DBucket(cap, pairs[lo][0], kind, succ)
        keys, vals, valid, hint = b.keys, b.vals, b.valid, b.hint
        # Same placement as h_insert on an empty bucket: first free slot
        # at or after the hint.
        for idx in range(lo, hi):
            k, v = pairs[idx]
            i = hint(k)
            while valid[i]:
                i += 1
                if i == cap:
                    i = 0
            vals[i] = v
            keys[i] = k
            valid[i] = 1
        b.count = hi - lo
        reads += hi - lo
        buckets.append(b)
    if counters is not None:
        counters["leaf_reads"] = counters.get("leaf_reads", 0) + reads
    return buckets


def build_tree(pairs, cfg, counters=None):
    """Root of a freshly built tree over sorted, strictly increasing pairs."""
    if not pairs:
        return None
    buckets = build_leaves(pairs, cfg, counters)
    entries = [(b.pivot, b) for b in buckets]
    level_sizes = [len(entries)]
    level = 1
    while True:
        segs = build_level(entries, cfg, level)
        entries = [(s.pivot, s) for s in segs]
        level_sizes.append(len(entries))
        if len(entries) == 1:
            break
        level += 1
    if counters is not None:
        counters["level_sizes"] = level_sizes
    return entries[0][1]


def check_sorted_pairs(pairs):
    prev = -1
    for k, _ in pairs:
        if not isinstance(k, int) or k < 0 or k > MAX_KEY:
            raise ValueError(f"key {k!r} is not an unsigned 64-bit integer")
        if k <= prev:
            raise ValueError("pairs must be sorted by strictly increasing key")
        prev = k


def bulk_load(pairs, cfg=None, counters=None):
    """Build an index from (key, value) pairs sorted by strictly increasing key."""
    from .index import BucketIndex
    return BucketIndex.from_sorted(pairs, cfg, counters=counters)
