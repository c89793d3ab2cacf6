"""Write path: H-insert, D-Bucket split and the combined SMO.

Everything here runs on the single writer. Structural changes never touch a
node readers can reach: replacements are built aside, their routing entries
are published in an ancestor S-Bucket, and the entry for the old node is
invalidated last. That final flag clear is the linearization point of an
insert that triggered an SMO.
"""
from __future__ import annotations

import random
from operator import itemgetter
from dataclasses import dataclass, field
from enum import IntEnum

from .bulkload import build_upward, make_segment, build_level
from .nodes import DBucket
from .segmentation import Corridor


_pivot = itemgetter(0)


class InsertOutcome(IntEnum):
    PLACED = 0
    OVERWROTE = 1
    BUCKET_FULL = 2


@dataclass
class SmoStats:
    dbucket_splits: int = 0
    resegments: int = 0
    merges: int = 0
    merge_fallbacks: int = 0
    root_growths: int = 0
    # Nothing in this design moves a stored pair between slots of a live
    # bucket; the counter exists so workloads can assert it.
    shifts_performed: int = 0
    smo_sizes: list = field(default_factory=list)

    @property
    def combined_smos(self) -> int:
        return self.resegments + self.merges

    def as_dict(self) -> dict:
        return {
            "dbucket_splits": self.dbucket_splits,
            "resegments": self.resegments,
            "merges": self.merges,
            "merge_fallbacks": self.merge_fallbacks,
            "combined_smos": self.combined_smos,
            "root_growths": self.root_growths,
            "shifts_performed": self.shifts_performed,
        }


def h_insert(bucket, k, v):
    """Write (k, v) into the first free slot at or after hint(k), cyclically.

    Returns (outcome, slot). The slot contents go in before the valid flag,
    and the pivot is lowered only after the flag is set.
    """
    keys = bucket.keys
    valid = bucket.valid
    cap = bucket.capacity
    i = bucket.hint(k)
    for _ in range(cap):
        if valid[i]:
            if keys[i] == k:
                bucket.vals[i] = v
                return InsertOutcome.OVERWROTE, i
        else:
            bucket.vals[i] = v
            keys[i] = k
            valid[i] = 1
            bucket.count += 1
            if k < bucket.pivot:
                bucket.pivot = k
            return InsertOutcome.PLACED, i
        i += 1
        if i == cap:
            i = 0
    return InsertOutcome.BUCKET_FULL, -1


_rng = random.Random(0x5EED)


def quickselect_median(keys: list):
    """ceil(n/2)-th smallest element via Hoare partitioning (permutes `keys`)."""
    if not keys:
        raise ValueError("empty input")
    a = keys
    target = (len(a) - 1) // 2
    lo, hi = 0, len(a) - 1
    while lo < hi:
        pivot = a[_rng.randint(lo, hi)]
        i, j = lo, hi
        while i <= j:
            while a[i] < pivot:
                i += 1
            while a[j] > pivot:
                j -= 1
            if i <= j:
                a[i], a[j] = a[j], a[i]
                i += 1
                j -= 1
        if target <= j:
            hi = j
        elif target >= i:
            lo = i
        else:
            break
    return a[target]


def dbucket_split(old, k, v, cfg):
    """Split a full bucket plus the incoming pair around the median key.

    Keys <= median go left (keeping the old pivot), the rest go right with the
    smallest right-hand key as pivot. `old` is only read.
    """
    pairs = old.items()
    pairs.append((k, v))
    median = quickselect_median([p[0] for p in pairs])
    left_pairs = [p for p in pairs if p[0] <= median]
    right_pairs = [p for p in pairs if p[0] > median]
    right_pivot = min(p[0] for p in right_pairs)
    right_top = max(p[0] for p in right_pairs) + 1
    cap = cfg.dbucket_capacity
    kind = cfg.hint_kind
    left = DBucket(cap, min(old.pivot, k), kind, right_pivot)
    right = DBucket(cap, right_pivot, kind, max(old.hint_hi, right_top))
    for kk, vv in left_pairs:
        h_insert(left, kk, vv)
    for kk, vv in right_pairs:
        h_insert(right, kk, vv)
    return left, right


def locate_slot(seg, k):
    """Writer-side routing: (sbucket index, slot index) of the entry for k."""
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
    entries = sb.entries
    valid = sb.valid
    best = low = -1
    bp = lp = None
    for i in range(sb.capacity):
        if valid[i]:
            p = entries[i][0]
            if p <= k:
                if best < 0 or p > bp:
                    best, bp = i, p
            elif low < 0 or p < lp:
                low, lp = i, p
    return j, (best if best >= 0 else low)


def descend(root, k, depth=None):
    """Path [(segment, sbucket index, slot)] from the root towards k.

    Stops after `depth + 1` segments when depth is given.
    """
    path = []
    node = root
    while not node.leaf:
        j, slot = locate_slot(node, k)
        path.append((node, j, slot))
        if depth is not None and len(path) > depth:
            break
        node = node.sbuckets[j].entries[slot][1]
    return path


def child_at(step):
    seg, j, slot = step
    return seg.sbuckets[j].entries[slot][1]


def upper_bound(path, depth):
    """Smallest pivot to the right of the segment at path[depth], or None."""
    for i in range(depth - 1, -1, -1):
        seg, j, slot = path[i]
        sb = seg.sbuckets[j]
        p = sb.entries[slot][0]
        nxt = None
        for _, q, _ in sb.live():
            if q > p and (nxt is None or q < nxt):
                nxt = q
        if nxt is not None:
            return nxt
        if j + 1 < len(seg.sbuckets):
            return seg.sbuckets[j + 1].pivot
    return None


def publish(sb, entry):
    """Write a routing entry into the first free slot, then set its flag."""
    valid = sb.valid
    for i in range(sb.capacity):
        if not valid[i]:
            sb.entries[i] = entry
            valid[i] = 1
            sb.count += 1
            return i
    raise RuntimeError("S-Bucket has no free slot")


def invalidate(sb, slot):
    sb.valid[slot] = 0
    sb.count -= 1
    sb.version += 1


class Writer:
    """Insert and SMO logic bound to one index."""

    def __init__(self, index):
        self.index = index
        self.cfg = index.cfg
        self.stats = index.stats

    # -- insert ---------------------------------------------------------

    def insert(self, k, v):
        idx = self.index
        root = idx.root
        if root is None:
            idx._bootstrap(k, v)
            return InsertOutcome.PLACED
        path = []
        node = root
        while not node.leaf:
            j, slot = locate_slot(node, k)
            path.append((node, j, slot))
            node = node.sbuckets[j].entries[slot][1]
        outcome, _ = h_insert(node, k, v)
        if outcome is InsertOutcome.BUCKET_FULL:
            self.split_and_propagate(path, node, k, v)
            outcome = InsertOutcome.PLACED
        if outcome is InsertOutcome.PLACED:
            idx.size += 1
            if k < idx.min_key:
                self.lower_leftmost(k)
                idx.min_key = k
        return outcome

    def split_and_propagate(self, path, old, k, v):
        left, right = dbucket_split(old, k, v, self.cfg)
        self.stats.dbucket_splits += 1
        retired = [old]
        self.replace_child(path, len(path) - 1, [(left.pivot, left), (right.pivot, right)], retired)
        epochs = self.index.epochs
        for node in retired:
            epochs.retire(node)
        epochs.try_advance()

    def replace_child(self, path, depth, new_entries, retired):
        """Swap the child entry at path[depth] for `new_entries`."""
        seg, j, slot = path[depth]
        sb = seg.sbuckets[j]
        if sb.free >= len(new_entries):
            for e in new_entries:
                publish(sb, e)
            invalidate(sb, slot)
            return
        out, rdepth = self.combined_smo(path, depth, new_entries, retired)
        if rdepth == 0:
            self.replace_root(out)
        else:
            self.replace_child(path, rdepth - 1, out, retired)

    def replace_root(self, entries):
        idx = self.index
        if len(entries) > 1:
            level = entries[0][1].level + 1
            entries = build_upward(entries, self.cfg, level)
            self.stats.root_growths += 1
        idx.root = entries[0][1]

    def lower_leftmost(self, k):
        """Lower pivots along the leftmost path after `k` is already stored."""
        node = self.index.root
        while not node.leaf:
            sb = node.sbuckets[0]
            low = None
            for i, p, _ in sb.live():
                if low is None or p < sb.entries[low][0]:
                    low = i
            e = sb.entries[low]
            if e[0] > k:
                sb.entries[low] = (k, e[1])
            if sb.pivot > k:
                sb.pivot = k
            if node.pivot > k:
                node.pivot = k
            node = e[1]

    # -- combined SMO ---------------------------------------------------

    def merged_children(self, path, depth, new_entries):
        """Children of path[depth] in key order with the replaced entry
        swapped for `new_entries`."""
        seg, j, slot = path[depth]
        out = []
        for jj, sb in enumerate(seg.sbuckets):
            entries = sb.entries
            valid = sb.valid
            skip = slot if jj == j else -1
            for i in range(sb.capacity):
                if valid[i] and i != skip:
                    out.append(entries[i])
        out.extend(new_entries)
        # S-Buckets are already mutually ordered, so this is a near-sorted run
        out.sort(key=_pivot)
        return out

    def neighbors(self, path, depth, width):
        """Up to `width` same-level segments on each side, found by descent."""
        seg = path[depth][0]
        root = self.index.root
        lefts = []
        cur_path = path
        for _ in range(width):
            cur = cur_path[depth][0]
            p = descend(root, cur.pivot - 1, depth)
            if len(p) <= depth or p[depth][0] is cur:
                break
            lefts.append(p)
            cur_path = p
        rights = []
        cur_path = path
        for _ in range(width):
            ub = upper_bound(cur_path, depth)
            if ub is None:
                break
            p = descend(root, ub, depth)
            if p[depth][0] is seg:
                break
            rights.append(p)
            cur_path = p
        return lefts, rights

    def combined_smo(self, path, depth, new_entries, retired):
        seg = path[depth][0]
        lefts, rights = self.neighbors(path, depth, self.cfg.neighbor_window)
        group = [seg] + [p[depth][0] for p in lefts + rights]
        avg = sum(s.smo_count for s in group) / len(group)
        self.stats.smo_sizes.append(seg.fanout)
        if avg < self.cfg.merge_threshold:
            return self.resegment(path, depth, new_entries, retired), depth
        return self.merge_neighbors(path, depth, new_entries, retired)

    def resegment(self, path, depth, new_entries, retired, entries=None):
        """Re-cut one segment's entries into >= 1 fresh segments (scaling,
        retraining and splitting in one pass)."""
        seg = path[depth][0]
        if entries is None:
            entries = self.merged_children(path, depth, new_entries)
        segs = build_level(entries, self.cfg, seg.level, seg.smo_count + 1)
        retired.append(seg)
        self.stats.resegments += 1
        return [(s.pivot, s) for s in segs]

    def merge_neighbors(self, path, depth, new_entries, retired):
        """Grow a run of neighbouring segments while one corridor still fits
        their child pivots, then rebuild the subtree under their lowest
        common ancestor."""
        cfg = self.cfg
        root = self.index.root
        seg = path[depth][0]
        own = self.merged_children(path, depth, new_entries)
        pivots = [p for p, _ in own]
        corridor = Corridor(pivots[0], cfg.corridor_error)
        if not corridor.admit_all(pivots[1:]):
            self.stats.merge_fallbacks += 1
            return self.resegment(path, depth, new_entries, retired, own), depth

        left_path = path
        while True:
            cur = left_path[depth][0]
            p = descend(root, cur.pivot - 1, depth)
            if len(p) <= depth or p[depth][0] is cur:
                break
            cand = [q for q, _ in p[depth][0].children()] + pivots
            c = Corridor(cand[0], cfg.corridor_error)
            if not c.admit_all(cand[1:]):
                break
            pivots, corridor, left_path = cand, c, p

        right_path = path
        while True:
            ub = upper_bound(right_path, depth)
            if ub is None:
                break
            p = descend(root, ub, depth)
            if not corridor.admit_all([q for q, _ in p[depth][0].children()]):
                break
            right_path = p

        if left_path is path and right_path is path:
            self.stats.merge_fallbacks += 1
            return self.resegment(path, depth, new_entries, retired, own), depth

        lca_depth = 0
        for i in range(depth + 1):
            if left_path[i][0] is right_path[i][0]:
                lca_depth = i
            else:
                break
        lca = path[lca_depth][0]
        replaced = child_at(path[depth])
        leaves = []
        self._collect_leaves(lca, replaced, new_entries, leaves, retired)
        entries = leaves
        for level in range(1, lca.level + 1):
            segs = build_level(entries, cfg, level, 0)
            entries = [(s.pivot, s) for s in segs]
        self.stats.merges += 1
        return entries, lca_depth

    def _collect_leaves(self, node, replaced, new_entries, out, retired):
        retired.append(node)
        for p, child in node.children():
            if child is replaced:
                if node.level == 1:
                    out.extend(new_entries)
                else:
                    for _, fresh in new_entries:
                        self._collect_fresh(fresh, out)
            elif node.level == 1:
                out.append((p, child))
            else:
                self._collect_leaves(child, replaced, new_entries, out, retired)

    def _collect_fresh(self, node, out):
        # never-published nodes from a lower SMO: read, do not retire
        for p, child in node.children():
            if node.level == 1:
                out.append((p, child))
            else:
                self._collect_fresh(child, out)
