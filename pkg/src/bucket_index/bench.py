"""Workload runners shared by the CLI and scripts/."""
from __future__ import annotations

import gc
import threading
import time

import numpy as np

from .config import IndexConfig
from .harness import gen_synthetic, gen_workload, load_keyset, prepare_keys
from .index import BucketIndex
from .metrics import Breakdown, TimedIndex, build_report


def source_keys(keyset=None, synthetic="uniform", n=1_000_000, seed=0) -> np.ndarray:
    if keyset:
        keys = prepare_keys(load_keyset(keyset))
        if len(keys) > n:
            rng = np.random.default_rng(seed)
            keys = np.sort(rng.choice(keys, n, replace=False))
        return keys
    return gen_synthetic(synthetic, n, seed)


def make_workload(keys, bulk, ops, ratio, seed=0, scan_fraction=0.0):
    """Bulk-load `bulk` keys; inserts draw from the rest of `keys`."""
    total = len(keys)
    frac = bulk / total if total else 0.0
    return gen_workload(keys, ops, ratio, seed, bulk_fraction=frac, scan_fraction=scan_fraction)


READ_BATCH = 64


def _run_ops(target, ops, reader):
    """Replay ops; consecutive point reads go through `lookup_many` in runs
    of up to READ_BATCH keys. `target` is a TimedIndex or, for an
    uninstrumented replay, a (Reader, BucketIndex) pair."""
    if isinstance(target, tuple):
        lookup_many, insert = target[0].lookup_many, target[1].insert
    else:
        lookup_many, insert = target.lookup_many, target.insert
    run = []
    for op in ops:
        kind = op[0]
        if kind == "R":
            run.append(op[1])
            if len(run) == READ_BATCH:
                lookup_many(run)
                run = []
            continue
        if run:
            lookup_many(run)
            run = []
        if kind == "I":
            insert(op[1], op[2])
        else:
            reader.range_query(op[1], op[2])
            if not isinstance(target, tuple):
                target.break_chain()
    if run:
        lookup_many(run)


def replay_plain(workload, cfg):
    """Uninstrumented single-thread replay; returns (index, seconds)."""
    index = BucketIndex.from_sorted(workload.bulk, cfg, validate=False)
    reader = index.reader()
    t0 = time.perf_counter()
    _run_ops((reader, index), workload.ops, reader)
    return index, time.perf_counter() - t0


def run_workload(workload, cfg: IndexConfig, threads: int = 1):
    """Bulk-load then replay ops; returns (index, MetricsReport).

    With threads > 1, one writer thread applies every insert while the reads
    are split evenly across threads - 1 reader threads.
    """
    index = BucketIndex.from_sorted(workload.bulk, cfg, validate=False)
    ops = workload.ops
    if threads <= 1:
        timed = TimedIndex(index)
        t0 = time.perf_counter()
        _run_ops(timed, ops, index.reader())
        elapsed = time.perf_counter() - t0
        bd = timed.bd
        n_readers = 0
    else:
        writes = [op for op in ops if op[0] == "I"]
        reads = [op for op in ops if op[0] != "I"]
        n_readers = threads - 1
        shards = [reads[i::n_readers] for i in range(n_readers)]
        timers = [TimedIndex(index) for _ in range(threads)]
        start = threading.Barrier(threads + 1)

        def work(timed, part):
            start.wait()
            _run_ops(timed, part, index.reader())

        pool = [threading.Thread(target=work, args=(timers[0], writes))]
        pool += [threading.Thread(target=work, args=(timers[i + 1], shards[i]))
                 for i in range(n_readers)]
        for t in pool:
            t.start()
        start.wait()
        t0 = time.perf_counter()
        for t in pool:
            t.join()
        elapsed = time.perf_counter() - t0
        bd = Breakdown()
        for t in timers:
            bd = bd + t.bd
    throughput = len(ops) / elapsed if elapsed > 0 else None
    report = build_report(index, bd, throughput, extra={
        "ops": len(ops), "elapsed_s": elapsed, "threads": threads,
        "writer_threads": 1 if threads > 1 else 0, "reader_threads": n_readers,
        "ratio": "%d:%d" % tuple(workload.ratio), "size": index.size})
    return index, report


def time_bulk_load(pairs, cfg):
    t0 = time.perf_counter()
    index = BucketIndex.from_sorted(pairs, cfg, validate=False)
    return index, time.perf_counter() - t0


def time_insert_loop(pairs, cfg):
    index = BucketIndex(cfg)
    insert = index.insert
    t0 = time.perf_counter()
    for k, v in pairs:
        insert(k, v)
    return index, time.perf_counter() - t0


def instrumentation_overhead(workload, cfg, trials=5, chunk=1000) -> float:
    """Instrumented over plain replay cost, measured as a paired comparison.

    A plain and an instrumented index replay the trace in lockstep, `chunk`
    ops at a time, alternating which one goes first. Each chunk keeps its
    best CPU time per side over `trials` passes; the result is the ratio of
    the summed bests. Pairing at chunk granularity cancels the slow drifts
    in machine speed that swamp whole-replay timings. GC is paused while
    measuring.
    """
    ops = workload.ops
    spans = [(a, min(a + chunk, len(ops))) for a in range(0, len(ops), chunk)]
    best = [[float("inf")] * len(spans), [float("inf")] * len(spans)]
    clock = time.process_time
    enabled = gc.isenabled()
    try:
        for _ in range(trials):
            targets = []
            for which in (0, 1):
                index = BucketIndex.from_sorted(workload.bulk, cfg, validate=False)
                reader = index.reader()
                targets.append(((reader, index) if which == 0 else TimedIndex(index), reader))
            gc.collect()
            gc.disable()
            for c, (a, b) in enumerate(spans):
                part = ops[a:b]
                for which in ((0, 1) if c % 2 else (1, 0)):
                    target, reader = targets[which]
                    t0 = clock()
                    _run_ops(target, part, reader)
                    dt = clock() - t0
                    if dt < best[which][c]:
                        best[which][c] = dt
            if enabled:
                gc.enable()
    finally:
        if enabled:
            gc.enable()
    return sum(best[1]) / sum(best[0])
