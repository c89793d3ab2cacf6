"""Multi-threaded stress runs: one writer inserting, many readers checking."""
from __future__ import annotations

import random
import sys
import threading
import time
import traceback
from dataclasses import dataclass, field

from .config import IndexConfig
from .harness import gen_synthetic, value_for
from .index import BucketIndex


@dataclass
class StressResult:
    inserts: int
    lookups: int = 0
    missing: list = field(default_factory=list)       # inserted before the probe, not found
    fabricated: list = field(default_factory=list)    # value never written for that key
    regressions: list = field(default_factory=list)   # seen once, later missing
    errors: list = field(default_factory=list)        # exceptions raised in any thread
    splits: int = 0
    combined_smos: int = 0
    retired: int = 0
    reclaimed: int = 0
    elapsed_s: float = 0.0

    @property
    def clean(self) -> bool:
        return not (self.missing or self.fabricated or self.regressions or self.errors)

    def summary(self) -> dict:
        return {"inserts": self.inserts, "lookups": self.lookups, "missing": len(self.missing),
                "fabricated": len(self.fabricated), "regressions": len(self.regressions),
                "errors": len(self.errors), "splits": self.splits,
                "combined_smos": self.combined_smos, "retired": self.retired,
                "reclaimed": self.reclaimed, "elapsed_s": round(self.elapsed_s, 2)}


def spmc_stress(n_inserts, n_readers=7, cfg=None, n_bulk=10_000, tracked=10_000, seed=0,
                kind="uniform", switch_interval=1e-4, reader_pause=0.0, pause_every=16,
                max_recorded=20) -> StressResult:
    """Writer inserts `n_inserts` fresh keys while readers probe continuously.

    Readers check three things per probe: a key whose insert returned before
    the probe began is found; any value returned is the one written for that
    key; a tracked key that was found once (by any reader) is found again.
    Keys with odd index in the generated pool are never inserted and must
    stay absent. With `reader_pause` > 0 each reader sleeps that long after
    every `pause_every` probes, leaving the writer a larger share of a single
    core (under the GIL all threads share one interpreter lock).
    """
    cfg = cfg or IndexConfig()
    pool = [int(k) for k in gen_synthetic(kind, 2 * (n_bulk + n_inserts), seed)]
    present, absent = pool[0::2], pool[1::2]
    rng = random.Random(seed)
    rng.shuffle(present)
    bulk = sorted(present[:n_bulk])
    order = present[n_bulk:]
    index = BucketIndex.from_sorted([(k, value_for(k)) for k in bulk], cfg, validate=False)
    watch = order[:: max(1, len(order) // tracked)][:tracked] if order else []

    res = StressResult(inserts=len(order))
    lock = threading.Lock()
    done = [0]                  # inserts completed, published by the writer
    stop = threading.Event()
    seen = set()                # tracked keys some reader has found
    lookups = [0] * n_readers

    def record(bucket, item):
        with lock:
            if len(bucket) < max_recorded:
                bucket.append(item)

    def writer():
        try:
            insert = index.insert
            for i, k in enumerate(order):
                insert(k, value_for(k))
                done[0] = i + 1
        except Exception:
            record(res.errors, ("writer", traceback.format_exc()))
        finally:
            stop.set()

    def reader(rid):
        r = index.reader()
        rr = random.Random(seed * 1000 + rid)
        n = 0
        try:
            while not stop.is_set():
                n += 1
                if reader_pause and n % pause_every == 0:
                    time.sleep(reader_pause)
                c = rr.random()
                if c < 0.4:
                    upto = done[0]
                    if upto == 0:
                        continue
                    k = order[rr.randrange(upto)]
                    v = r.lookup(k)
                    if v is None:
                        record(res.missing, k)
                    elif v != value_for(k):
                        record(res.fabricated, (k, v))
                elif c < 0.8 and watch:
                    k = watch[rr.randrange(len(watch))]
                    was_seen = k in seen
                    v = r.lookup(k)
                    if v is None:
                        if was_seen:
                            record(res.regressions, k)
                    elif v != value_for(k):
                        record(res.fabricated, (k, v))
                    elif not was_seen:
                        seen.add(k)
                elif c < 0.9:
                    k = absent[rr.randrange(len(absent))]
                    v = r.lookup(k)
                    if v is not None:
                        record(res.fabricated, (k, v))
                else:
                    k = bulk[rr.randrange(len(bulk))] if bulk else 0
                    v = r.lookup(k)
                    if bulk and v != value_for(k):
                        record(res.missing if v is None else res.fabricated, (k, v))
        except Exception:
            record(res.errors, (f"reader{rid}", traceback.format_exc()))
            stop.set()
        lookups[rid] = n

    old = sys.getswitchinterval()
    sys.setswitchinterval(switch_interval)
    try:
        threads = [threading.Thread(target=reader, args=(i,)) for i in range(n_readers)]
        w = threading.Thread(target=writer)
        t0 = time.perf_counter()
        for t in threads:
            t.start()
        w.start()
        w.join()
        for t in threads:
            t.join()
        res.elapsed_s = time.perf_counter() - t0
    finally:
        sys.setswitchinterval(old)

    res.lookups = sum(lookups)
    res.splits = index.stats.dbucket_splits
    res.combined_smos = index.stats.combined_smos
    res.retired = index.epochs.retired
    res.reclaimed = index.epochs.reclaimed
    # final state must hold everything
    for k in order:
        if index.lookup(k) != value_for(k):
            record(res.missing, k)
    try:
        index.check_invariants()
    except AssertionError as exc:
        record(res.errors, ("invariants", repr(exc)))
    return res


def read_throughput(index, keys, n_readers, duration=1.0, seed=0) -> float:
    """Total lookups per second achieved by `n_readers` threads."""
    counts = [0] * n_readers
    start = threading.Barrier(n_readers + 1)
    stop = threading.Event()

    def work(rid):
        r = index.reader()
        rr = random.Random(seed + rid)
        n = 0
        m = len(keys)
        start.wait()
        while not stop.is_set():
            for _ in range(64):
                r.lookup(keys[rr.randrange(m)])
            n += 64
        counts[rid] = n

    threads = [threading.Thread(target=work, args=(i,)) for i in range(n_readers)]
    for t in threads:
        t.start()
    start.wait()
    t0 = time.perf_counter()
    time.sleep(duration)
    stop.set()
    for t in threads:
        t.join()
    return sum(counts) / (time.perf_counter() - t0)
