"""The index object: shared root, single writer, many readers."""
from __future__ import annotations

import threading
from contextlib import contextmanager
from itertools import repeat

from . import read
from .bulkload import build_tree, check_sorted_pairs
from .concurrency import EpochManager
from .config import IndexConfig
from .nodes import MAX_KEY, DBucket, SBucket, Segment
from .segmentation import LinearModel
from .write import InsertOutcome, SmoStats, Writer


class Reader:
    """Read handle owning one epoch slot. Use one per thread."""

    def __init__(self, index):
        self.index = index
        self.slot = index.epochs.register()

    def lookup(self, k):
        idx = self.index
        slot = self.slot
        slot.epoch = idx.epochs.epoch
        try:
            return read.lookup(idx.root, k, idx.cfg.early_stop_on_empty)
        finally:
            slot.epoch = None

    def lookup_many(self, keys):
        """Lookups of several keys under one epoch pin."""
        idx = self.index
        slot = self.slot
        slot.epoch = idx.epochs.epoch
        try:
            root = idx.root
            early = idx.cfg.early_stop_on_empty
            if len(keys) == 1:
                return [read.lookup(root, keys[0], early)]
            n = len(keys)
            return list(map(read.lookup, repeat(root, n), keys, repeat(early, n)))
        finally:
            slot.epoch = None

    def range_query(self, start, count, stats=None, executor=None):
        idx = self.index
        self.slot.epoch = idx.epochs.epoch
        try:
            return read.range_query(idx.root, start, count, stats, executor)
        finally:
            self.slot.epoch = None

    @contextmanager
    def pinned(self):
        """Hold the epoch across several reads (e.g. while keeping node refs)."""
        self.slot.epoch = self.index.epochs.epoch
        try:
            yield self.index.root
        finally:
            self.slot.epoch = None


class BucketIndex:
    """Updatable learned index: Segments route to unsorted, hinted D-Buckets.

    Exactly one thread may call `insert` at a time; any number of threads may
    call `lookup` / `range_query` concurrently with it.
    """

    def __init__(self, cfg: IndexConfig | None = None):
        self.cfg = cfg or IndexConfig()
        self.root = None
        self.size = 0
        self.min_key = MAX_KEY + 1
        self.stats = SmoStats()
        self.epochs = EpochManager()
        self._local = threading.local()
        self._writer = Writer(self)
        self._writing = False

    @classmethod
    def from_sorted(cls, pairs, cfg=None, counters=None, validate=True):
        idx = cls(cfg)
        pairs = list(pairs)
        if validate:
            check_sorted_pairs(pairs)
        idx.root = build_tree(pairs, idx.cfg, counters)
        idx.size = len(pairs)
        if pairs:
            idx.min_key = pairs[0][0]
        return idx

    # -- reads ----------------------------------------------------------

    def reader(self) -> Reader:
        return Reader(self)

    def _reader(self) -> Reader:
        try:
            return self._local.reader
        except AttributeError:
            r = self._local.reader = Reader(self)
            return r

    def lookup(self, k):
        """Value stored under `k`, or None."""
        return self._reader().lookup(k)

    get = lookup

    def __contains__(self, k):
        return self.lookup(k) is not None

    def range_query(self, start, count, stats=None, executor=None):
        return self._reader().range_query(start, count, stats, executor)

    # -- writes ---------------------------------------------------------

    def insert(self, k, v) -> InsertOutcome:
        if not 0 <= k <= MAX_KEY:
            raise ValueError(f"key {k!r} is not an unsigned 64-bit integer")
        assert not self._writing, "concurrent writers are not supported"
        self._writing = True
        try:
            return self._writer.insert(k, v)
        finally:
            self._writing = False

    def _bootstrap(self, k, v):
        b = DBucket(self.cfg.dbucket_capacity, k, self.cfg.hint_kind)
        from .write import h_insert
        h_insert(b, k, v)
        sb = SBucket(self.cfg.sbucket_capacity, [(k, b)])
        self.root = Segment(LinearModel(0.0, 0.0, k), [sb], level=1)
        self.size = 1
        self.min_key = k

    # -- introspection --------------------------------------------------

    @property
    def height(self) -> int:
        return 0 if self.root is None else self.root.level

    def __len__(self):
        return self.size

    def buckets(self):
        if self.root is None:
            return iter(())
        return read.iter_buckets(self.root)

    def items(self):
        for b in self.buckets():
            yield from sorted(b.items())

    def segments(self):
        """All live segments, top-down, level by level."""
        if self.root is None:
            return []
        out = []
        frontier = [self.root]
        while frontier:
            out.extend(frontier)
            nxt = []
            for s in frontier:
                if s.level > 1:
                    nxt.extend(c for _, c in s.children())
            frontier = nxt
        return out

    def leaf_depth(self, k) -> int:
        node = self.root
        d = 0
        while not node.leaf:
            node = read.segment_route(node, k)
            d += 1
        return d

    def check_invariants(self):
        """Walk the whole tree and assert the structural invariants."""
        if self.root is None:
            return
        prev_pivot = None
        total = 0

        def walk(node, lo, hi, level):
            nonlocal prev_pivot, total
            if node.leaf:
                assert level == 0, "leaves must sit at uniform depth"
                assert node.count == sum(node.valid), "count/valid mismatch"
                for k, _ in node.items():
                    assert k >= node.pivot, "key below bucket pivot"
                    assert lo <= k and (hi is None or k < hi), "key outside bucket range"
                if node.count:
                    assert node.pivot == min(k for k, _ in node.items())
                assert prev_pivot is None or node.pivot > prev_pivot, "bucket pivots not increasing"
                prev_pivot = node.pivot
                total += node.count
                return
            assert node.level == level, "segment level mismatch"
            sbs = node.sbuckets
            assert node.pivot == sbs[0].pivot
            for a, b in zip(sbs, sbs[1:]):
                assert a.pivot < b.pivot, "S-Bucket pivots not increasing"
            children = node.children()
            for sb in sbs:
                assert sb.count == sum(sb.valid)
                assert sb.pivot == min(p for _, p, _ in sb.live())
            for i, (p, child) in enumerate(children):
                nxt = children[i + 1][0] if i + 1 < len(children) else hi
                assert child.pivot == p, "entry pivot differs from child pivot"
                walk(child, p, nxt, level - 1)

        walk(self.root, self.root.pivot, None, self.root.level)
        assert total == self.size, f"stored {total} pairs, expected {self.size}"
