"""Fanout, lookup/insert efficiency, memory overhead and time breakdown."""
from __future__ import annotations

import csv
import io
import json
import time
from collections import Counter
from itertools import repeat
from dataclasses import asdict, dataclass, field

from . import read
from .write import InsertOutcome, h_insert, locate_slot

PAIR_BYTES = 16


def compute_e_lookup(latencies):
    """N / sum(t): reciprocal of mean latency. None for no samples."""
    latencies = list(latencies)
    if not latencies:
        return None
    total = sum(latencies)
    return len(latencies) / total if total > 0 else None


def compute_e_insert(insert_latencies, lookup_latencies):
    """N / sum(t_insert - t_lookup): efficiency of the insert-only part."""
    pairs = list(zip(insert_latencies, lookup_latencies))
    if not pairs:
        return None
    total = sum(ti - tl for ti, tl in pairs)
    return len(pairs) / total if total > 0 else None


def index_bytes(index) -> int:
    total = 0
    for seg in index.segments():
        total += seg.nbytes()
    for b in index.buckets():
        total += b.nbytes()
    return total


def compute_o_mem(index, payload_bytes=None) -> float:
    """Bytes of all nodes (slots, flags, models, pointers, headers) over the
    bytes of the stored pairs (16 per pair unless given)."""
    if payload_bytes is None:
        payload_bytes = PAIR_BYTES * index.size
    if payload_bytes <= 0:
        raise ValueError("payload size must be positive")
    return index_bytes(index) / payload_bytes


def probe_histogram(index) -> Counter:
    """Probes an H-lookup needs for each stored key: cyclic distance from the
    key's hint slot to its slot, plus one."""
    hist = Counter()
    for b in index.buckets():
        cap = b.capacity
        hint = b.hint
        keys = b.keys
        for i, ok in enumerate(b.valid):
            if ok:
                hist[(i - hint(keys[i])) % cap + 1] += 1
    return hist


def fanout_histogram(index) -> dict:
    """level -> Counter(fanout); level 0 counts pairs per D-Bucket."""
    hist = {}
    for seg in index.segments():
        hist.setdefault(seg.level, Counter())[seg.fanout] += 1
    leaves = Counter(b.count for b in index.buckets())
    if leaves:
        hist[0] = leaves
    return hist


@dataclass(slots=True)
class Breakdown:
    """Wall time (ns) attributed by scope; one per thread, merged with `+`."""
    segment_ns: int = 0
    dbucket_ns: int = 0
    insert_ns: int = 0
    memmgmt_ns: int = 0
    insert_lookup_ns: int = 0
    lookups: int = 0
    inserts: int = 0

    def __add__(self, other):
        return Breakdown(
            self.segment_ns + other.segment_ns, self.dbucket_ns + other.dbucket_ns,
            self.insert_ns + other.insert_ns, self.memmgmt_ns + other.memmgmt_ns,
            self.insert_lookup_ns + other.insert_lookup_ns,
            self.lookups + other.lookups, self.inserts + other.inserts)

    def percentages(self) -> dict:
        get_total = self.segment_ns + self.dbucket_ns
        put_total = self.insert_ns + self.memmgmt_ns
        return {
            "segmentLookupPct": 100.0 * self.segment_ns / get_total if get_total else 0.0,
            "dbucketLookupPct": 100.0 * self.dbucket_ns / get_total if get_total else 0.0,
            "insertPct": 100.0 * self.insert_ns / put_total if put_total else 0.0,
            "memMgmtPct": 100.0 * self.memmgmt_ns / put_total if put_total else 0.0,
            "getSharePct": 100.0 * get_total / (get_total + put_total) if get_total + put_total else 0.0,
            "putSharePct": 100.0 * put_total / (get_total + put_total) if get_total + put_total else 0.0,
        }


FOLD_EVERY = 4096
_locate = read.locate
_h_lookup = read.h_lookup
_FULL = InsertOutcome.BUCKET_FULL
_OVERWROTE = InsertOutcome.OVERWROTE


class TimedIndex:
    """Instrumented twin of the index hot paths; one instance per thread.

    Lookups time routing and the bucket probe separately; inserts time the
    routing + H-insert body apart from splits and SMOs, which are charged to
    memory management. The plain index paths carry no timers.

    Scopes are chained: each operation starts at the timestamp where the
    previous one ended, so consecutive operations cost two clock reads
    instead of three and the scopes tile the replay loop (the loop's own
    overhead lands in the first scope of the next operation). `break_chain`
    restarts timing after untimed work such as a range scan. Timestamps
    are logged as tuples and folded into the breakdown every
    FOLD_EVERY operations, which is cheaper than three counter updates per op.
    """

    def __init__(self, index, clock=time.perf_counter_ns):
        self.index = index
        self.clock = clock
        self._bd = Breakdown()
        self._log = []
        self._rlog = []
        self._slot = index.epochs.register()
        self._epochs = index.epochs
        self._early = index.cfg.early_stop_on_empty
        self._t = None

    @property
    def bd(self) -> Breakdown:
        self._fold()
        return self._bd

    def _fold(self):
        # column sums run in C; sum(t1) - sum(t0) == sum(t1 - t0) exactly
        rlog = self._rlog
        bd = self._bd
        if rlog:
            t0, t1, t2, n = zip(*rlog)
            bd.segment_ns += sum(t1) - sum(t0)
            bd.dbucket_ns += sum(t2) - sum(t1)
            bd.lookups += sum(n)
            rlog.clear()
        log = self._log
        if log:
            t0, t1, t2 = zip(*log)
            s0 = sum(t0)
            bd.insert_ns += sum(t2) - s0
            bd.insert_lookup_ns += sum(t1) - s0
            bd.inserts += len(log)
            log.clear()

    def lookup(self, k):
        return self.lookup_many([k])[0]

    def lookup_many(self, keys):
        """Lookups of a run of keys: routing of every key is one scope, the
        bucket probes the next."""
        clock = self.clock
        t0 = self._t
        if t0 is None:
            t0 = clock()
        idx = self.index
        slot = self._slot
        slot.epoch = self._epochs.epoch
        try:
            root = idx.root
            if root is None:
                self._t = None
                return [None] * len(keys)
            locate = _locate
            early = self._early
            if len(keys) == 1:
                k = keys[0]
                node = root
                while not node.leaf:
                    node = locate(node, k)[1][1]
                t1 = clock()
                out = [_h_lookup(node, k, early)]
            else:
                leaves = []
                for k in keys:
                    node = root
                    while not node.leaf:
                        node = locate(node, k)[1][1]
                    leaves.append(node)
                t1 = clock()
                out = list(map(_h_lookup, leaves, keys, repeat(early, len(keys))))
        finally:
            slot.epoch = None
        t2 = self._t = clock()
        rlog = self._rlog
        rlog.append((t0, t1, t2, len(keys)))
        if len(rlog) >= FOLD_EVERY:
            self._fold()
        return out

    def insert(self, k, v):
        idx = self.index
        clock = self.clock
        t0 = self._t
        if t0 is None:
            t0 = clock()
        root = idx.root
        if root is None:
            idx.insert(k, v)
            t3 = self._t = clock()
            self._bd.memmgmt_ns += t3 - t0
            self._bd.inserts += 1
            return
        path = []
        node = root
        while not node.leaf:
            j, slot = locate_slot(node, k)
            path.append((node, j, slot))
            node = node.sbuckets[j].entries[slot][1]
        t1 = clock()
        outcome, _ = h_insert(node, k, v)
        if outcome is _FULL:
            t2 = clock()
            idx._writer.split_and_propagate(path, node, k, v)
            t3 = self._t = clock()
            self._bd.memmgmt_ns += t3 - t2
        else:
            t2 = self._t = clock()
        log = self._log
        log.append((t0, t1, t2))
        if len(log) >= FOLD_EVERY:
            self._fold()
        if outcome is not _OVERWROTE:
            idx.size += 1
            if k < idx.min_key:
                idx._writer.lower_leftmost(k)
                idx.min_key = k


@dataclass
class MetricsReport:
    fanout_histogram: dict
    e_lookup: float | None
    e_insert: float | None
    o_mem: float
    breakdown: dict
    probe_distance_histogram: dict
    smo_counters: dict
    throughput: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fanout_histogram"] = {str(lvl): {str(k): v for k, v in sorted(c.items())}
                                 for lvl, c in sorted(self.fanout_histogram.items())}
        d["probe_distance_histogram"] = {str(k): v for k, v in sorted(self.probe_distance_histogram.items())}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    CSV_COLUMNS = ["throughput", "e_lookup", "e_insert", "o_mem", "segmentLookupPct",
                   "dbucketLookupPct", "insertPct", "memMgmtPct", "dbucket_splits",
                   "resegments", "merges", "shifts_performed", "height"]

    def csv_row(self) -> dict:
        row = {"throughput": self.throughput, "e_lookup": self.e_lookup,
               "e_insert": self.e_insert, "o_mem": self.o_mem}
        row.update({k: self.breakdown.get(k) for k in
                    ("segmentLookupPct", "dbucketLookupPct", "insertPct", "memMgmtPct")})
        row.update({k: self.smo_counters.get(k) for k in
                    ("dbucket_splits", "resegments", "merges", "shifts_performed")})
        row["height"] = self.extra.get("height")
        return row


def write_csv(rows, columns, fh=None) -> str:
    buf = fh or io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue() if fh is None else ""


def build_report(index, breakdown: Breakdown | None = None, throughput=None, extra=None) -> MetricsReport:
    bd = breakdown or Breakdown()
    e_lookup = bd.lookups / (1e-9 * (bd.segment_ns + bd.dbucket_ns)) if bd.lookups and bd.segment_ns + bd.dbucket_ns else None
    insert_only = bd.insert_ns + bd.memmgmt_ns - bd.insert_lookup_ns
    e_insert = bd.inserts / (1e-9 * insert_only) if bd.inserts and insert_only > 0 else None
    return MetricsReport(
        fanout_histogram=fanout_histogram(index),
        e_lookup=e_lookup,
        e_insert=e_insert,
        o_mem=compute_o_mem(index) if index.size else 0.0,
        breakdown=bd.percentages(),
        probe_distance_histogram=dict(probe_histogram(index)),
        smo_counters=index.stats.as_dict(),
        throughput=throughput,
        extra={"height": index.height, **(extra or {})},
    )
