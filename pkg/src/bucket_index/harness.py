"""Differential testing against a plain ordered map, workloads and key files."""
from __future__ import annotations

import random
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sortedcontainers import SortedDict

from .config import IndexConfig
from .index import BucketIndex
from .write import locate_slot

SYNTHETIC_KINDS = ("uniform", "lognormal", "piecewise")

# read:write ratios 0:1, 1:9, ..., 9:1, 1:0
STANDARD_RATIOS = [(r, 10 - r) for r in range(11)]


class KeysetFormatError(ValueError):
    pass


# -- key files ------------------------------------------------------------

def save_keyset(keys, path):
    """8-byte little-endian count, then that many little-endian uint64 keys."""
    arr = np.asarray(keys, dtype="<u8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(arr)))
        fh.write(arr.tobytes())


def load_keyset(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise KeysetFormatError(f"{path}: truncated header ({len(data)} bytes)")
    (count,) = struct.unpack_from("<Q", data)
    body = len(data) - 8
    if body % 8:
        raise KeysetFormatError(f"{path}: body length {body} is not a multiple of 8")
    if body != 8 * count:
        raise KeysetFormatError(f"{path}: header says {count} keys, body holds {body // 8}")
    return np.frombuffer(data, dtype="<u8", offset=8).astype(np.uint64)


def prepare_keys(keys) -> np.ndarray:
    """Sorted, de-duplicated keys ready for bulk loading."""
    return np.unique(np.asarray(keys, dtype=np.uint64))


# -- synthetic data -------------------------------------------------------

def _unique_topped_up(draw, n, rng):
    out = np.unique(draw(n))
    for _ in range(1000):
        if len(out) >= n:
            break
        out = np.unique(np.concatenate([out, draw(2 * (n - len(out)))]))
    if len(out) < n:
        raise RuntimeError("could not draw enough distinct keys")
    if len(out) > n:
        out = np.sort(rng.choice(out, n, replace=False))
    return out


def gen_synthetic(kind: str, n: int, seed: int = 0) -> np.ndarray:
    """Sorted distinct uint64 keys of graded hardness.

    piecewise: three exactly linear runs with different spacings (easy);
    uniform: uniform over the 64-bit range (medium);
    lognormal: sigma=2 lognormal scaled to integers (hard, strongly curved CDF).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    if kind == "uniform":
        return _unique_topped_up(
            lambda m: rng.integers(0, 2**64, size=m, dtype=np.uint64), n, rng)
    if kind == "lognormal":
        return _unique_topped_up(
            lambda m: np.floor(rng.lognormal(0.0, 2.0, m) * 1e12).astype(np.uint64), n, rng)
    if kind in ("piecewise", "piecewiseLinear"):
        pieces = min(3, n)
        cuts = np.sort(rng.choice(np.arange(1, n), pieces - 1, replace=False)) if n > 1 else []
        gaps = np.empty(n, dtype=np.uint64)
        lo = 0
        for hi in list(cuts) + [n]:
            gaps[lo:hi] = int(2 ** rng.uniform(4, 30))
            lo = hi
        return np.cumsum(gaps) + np.uint64(rng.integers(0, 2**32))
    raise ValueError(f"unknown synthetic kind {kind!r}")


def value_for(k: int) -> int:
    """Deterministic payload so readers can recognise fabricated values."""
    return (k * 0x9E3779B97F4A7C15 + 1) & 0xFFFFFFFFFFFFFFFF


# -- workloads ------------------------------------------------------------

@dataclass
class Workload:
    """Replayable op trace. Ops: ("R", k), ("I", k, v), ("S", start, n)."""
    bulk: list
    ops: list
    seed: int
    ratio: tuple
    params: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.ops)

    @property
    def n_inserts(self):
        return sum(1 for op in self.ops if op[0] == "I")


def parse_ratio(text: str) -> tuple:
    try:
        r, w = (int(x) for x in text.split(":"))
    except ValueError:
        raise ValueError(f"ratio must look like R:W, got {text!r}") from None
    if r < 0 or w < 0 or r + w == 0:
        raise ValueError(f"invalid ratio {text!r}")
    return r, w


def gen_workload(keys, n_ops: int, ratio=(1, 1), seed: int = 0, bulk_fraction: float = 0.5,
                 scan_fraction: float = 0.0, scan_max: int = 100, absent_fraction: float = 0.1,
                 update_fraction: float = 0.0) -> Workload:
    """Bulk-load a random subset of `keys`, then mix reads and inserts.

    Inserted keys come from the held-out remainder in random order; reads hit
    a stored key except for `absent_fraction` of them. A `scan_fraction` of
    reads are range scans of up to `scan_max` pairs.
    """
    rng = random.Random(seed)
    keys = [int(k) for k in keys]
    pool = keys[:]
    rng.shuffle(pool)
    n_bulk = int(len(pool) * bulk_fraction)
    bulk = sorted(pool[:n_bulk])
    fresh = pool[n_bulk:]
    r, w = ratio
    p_read = r / (r + w)
    stored = list(bulk)
    hi = max(keys) if keys else 0
    ops = []
    nxt = 0
    for _ in range(n_ops):
        if rng.random() < p_read or nxt >= len(fresh):
            if stored and rng.random() >= absent_fraction:
                k = stored[rng.randrange(len(stored))]
            else:
                k = rng.randrange(0, hi + 2)
            if scan_fraction and rng.random() < scan_fraction:
                ops.append(("S", k, rng.randrange(0, scan_max + 1)))
            else:
                ops.append(("R", k))
        elif update_fraction and stored and rng.random() < update_fraction:
            k = stored[rng.randrange(len(stored))]
            ops.append(("I", k, rng.getrandbits(63)))
        else:
            k = fresh[nxt]
            nxt += 1
            stored.append(k)
            ops.append(("I", k, value_for(k)))
    return Workload(bulk=[(k, value_for(k)) for k in bulk], ops=ops, seed=seed, ratio=ratio,
                    params={"scan_fraction": scan_fraction, "absent_fraction": absent_fraction})


# -- differential check ---------------------------------------------------

@dataclass
class CheckResult:
    passed: bool
    ops_checked: int
    divergence: dict | None = None

    def __bool__(self):
        return self.passed


def differential_check(trace: Workload, cfg: IndexConfig | None = None,
                       skip_publish_key=None) -> CheckResult:
    """Replay `trace` on the index and on a SortedDict; stop at the first
    differing answer.

    `skip_publish_key` is a fault-injection hook: right after that key is
    inserted its slot's valid flag is cleared, as if the publish were lost.
    """
    cfg = cfg or IndexConfig()
    index = BucketIndex.from_sorted(trace.bulk, cfg, validate=False)
    oracle = SortedDict(trace.bulk)
    reader = index.reader()
    for i, op in enumerate(trace.ops):
        kind = op[0]
        if kind == "R":
            k = op[1]
            got = reader.lookup(k)
            want = oracle.get(k)
            if got != want:
                return CheckResult(False, i, {"op_index": i, "op": op, "expected": want, "got": got})
        elif kind == "I":
            _, k, v = op
            index.insert(k, v)
            oracle[k] = v
            if k == skip_publish_key:
                _drop_valid_flag(index, k)
        elif kind == "S":
            _, start, n = op
            got = reader.range_query(start, n)
            want = [(key, oracle[key]) for key in oracle.islice(oracle.bisect_left(start),
                                                                  oracle.bisect_left(start) + n)]
            if got != want:
                return CheckResult(False, i, {"op_index": i, "op": op, "expected": want, "got": got})
        else:
            raise ValueError(f"unknown op {op!r}")
    return CheckResult(True, len(trace.ops))


def _drop_valid_flag(index, k):
    node = index.root
    while not node.leaf:
        j, slot = locate_slot(node, k)
        node = node.sbuckets[j].entries[slot][1]
    for i in range(node.capacity):
        if node.valid[i] and node.keys[i] == k:
            node.valid[i] = 0
            node.count -= 1
            return
