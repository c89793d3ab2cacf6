"""Read path: Segment routing, hint-assisted bucket lookup, range scans."""
from __future__ import annotations

from .segmentation import model_predict_bucket


def locate(seg, k):
    """Return (sbucket index, routing entry) that `k` descends through.

    The model picks a starting S-Bucket, then neighbouring S-Buckets are
    walked until the one with the largest pivot <= k is found. Entries in an
    S-Bucket are unsorted, so every valid entry is examined; the entry with
    the largest pivot <= k wins, or the smallest entry when `k` lies below
    all of them (only possible on the leftmost path).
    """
    sbs = seg.sbuckets
    n = len(sbs)
    m = seg.model
    p = m.slope * (k - m.origin) + m.intercept
    j = 0 if p < 1 else (n - 1 if p >= n else int(p))
    while j > 0 and k < sbs[j].pivot:
        j -= 1
    while j + 1 < n and k >= sbs[j + 1].pivot:
        j += 1
    sb = sbs[j]
    cap = sb.capacity
    while True:
        # Publish-then-invalidate keeps some covering entry valid at every
        # instant, but a scan that passed the new slots before they were
        # written and reached the old one after it was cleared sees neither.
        # The version check catches exactly that case.
        ver = sb.version
        entries = sb.entries
        valid = sb.valid
        best = None
        lowest = None
        for i in range(cap):
            if valid[i]:
                e = entries[i]
                p = e[0]
                if p <= k:
                    if best is None or p > best[0]:
                        best = e
                elif lowest is None or p < lowest[0]:
                    lowest = e
        if sb.version == ver:
            break
    return j, (best if best is not None else lowest)


def segment_route(seg, k):
    """Child node of `seg` whose key range holds `k`."""
    return locate(seg, k)[1][1]


def h_lookup(bucket, k, early_stop=True):
    """Probe cyclically from the hinted slot; None when `k` is absent.

    Slots never empty out again once filled, so the probe chain from a key's
    hint to its slot has no gaps and the first empty slot proves absence.
    """
    keys = bucket.keys
    valid = bucket.valid
    cap = bucket.capacity
    i = bucket.hint(k)
    for _ in range(cap):
        if valid[i]:
            if keys[i] == k:
                return bucket.vals[i]
        elif early_stop:
            return None
        i += 1
        if i == cap:
            i = 0
    return None


def h_lookup_probes(bucket, k, early_stop=True):
    """Like `h_lookup` but also returns the number of slots probed."""
    keys = bucket.keys
    valid = bucket.valid
    cap = bucket.capacity
    i = bucket.hint(k)
    for n in range(1, cap + 1):
        if valid[i]:
            if keys[i] == k:
                return bucket.vals[i], n
        elif early_stop:
            return None, n
        i += 1
        if i == cap:
            i = 0
    return None, cap


def find_leaf(root, k):
    node = root
    while not node.leaf:
        node = locate(node, k)[1][1]
    return node


def lookup(root, k, early_stop=True):
    if root is None:
        return None
    node = root
    while not node.leaf:
        node = locate(node, k)[1][1]
    return h_lookup(node, k, early_stop)


def iter_buckets(node, start=None):
    """D-Buckets in key order, beginning with the one whose range holds `start`
    (the leftmost one when `start` is None).

    The generator's frames form the descent cursor: one (segment, S-Bucket,
    entry) position per level, so no sibling links are needed.
    """
    if node.leaf:
        yield node
        return
    sbs = node.sbuckets
    if start is None:
        j, first = 0, None
    else:
        j, first = locate(node, start)
    for jj in range(j, len(sbs)):
        ordered = sbs[jj].sorted_entries()
        if first is not None:
            yield from iter_buckets(first[1], start)
            ordered = [e for e in ordered if e[0] > first[0]]
            first = None
        for _, child in ordered:
            yield from iter_buckets(child, None)


def _sorted_copy(bucket):
    return sorted(bucket.items())


def range_query(root, start, count, stats=None, executor=None):
    """The `count` smallest stored pairs with key >= start, sorted by key.

    Each visited bucket's valid pairs are copied and sorted, then the runs are
    concatenated in bucket order. With an executor the per-bucket copy+sort
    runs on its workers; the result is the same either way. Keys not above the
    last emitted key are dropped, which absorbs the brief window in which an
    old bucket and its replacements are both reachable.
    """
    if count <= 0 or root is None:
        return []
    out = []
    copied = 0
    visited = []
    have = 0
    for b in iter_buckets(root, start):
        visited.append(b)
        if executor is not None and len(visited) > 1:
            have += b.count
            if have >= count:
                break
            continue
        pairs = b.items()
        copied += len(pairs)
        pairs.sort()
        _append_run(out, pairs, start)
        have = len(out)
        if have >= count:
            break
    if executor is not None and len(visited) > 1:
        for run in executor.map(_sorted_copy, visited[1:]):
            copied += len(run)
            _append_run(out, run, start)
    if stats is not None:
        stats["entries_copied"] = stats.get("entries_copied", 0) + copied
        stats["buckets"] = stats.get("buckets", 0) + len(visited)
    return out[:count]


def _append_run(out, run, start):
    floor = out[-1][0] if out else start - 1
    if run and run[0][0] > floor:
        out.extend(run)
    else:
        out.extend(p for p in run if p[0] > floor)
