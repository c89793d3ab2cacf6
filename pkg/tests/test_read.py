import bisect
import random
from concurrent.futures import ThreadPoolExecutor

import pytest
from hypothesis import given, strategies as st
from sortedcontainers import SortedDict

from bucket_index import BucketIndex, DBucket, HintKind, IndexConfig, LinearModel, SBucket
from bucket_index import h_insert, model_predict_bucket
from bucket_index.bulkload import make_segment
from bucket_index.harness import gen_synthetic, value_for
from bucket_index.read import h_lookup, h_lookup_probes, locate, lookup, range_query, segment_route

MOD4 = IndexConfig(dbucket_capacity=4, sbucket_capacity=4, fill_ratio=1.0, hint_kind=HintKind.MOD)


def leaf(pivot, *keys, cap=4):
    b = DBucket(cap, pivot, HintKind.MOD)
    for k in keys:
        h_insert(b, k, -k)
    return b


def seg(entries, level):
    return make_segment(entries, MOD4, level)


def figure_tree():
    """Three segment levels over [30, 54000) with the bucket [2187, 2586) inside."""
    target = leaf(2187, 2187, 2333, 2300)
    lvl1 = seg([(2000, leaf(2000, 2000)), (2187, target), (2586, leaf(2586, 2586))], 1)
    lvl1_left = seg([(500, leaf(500, 500)), (1200, leaf(1200, 1200))], 1)
    lvl1_right = seg([(6000, leaf(6000, 6000))], 1)
    lvl2 = seg([(500, lvl1_left), (2000, lvl1), (6000, lvl1_right)], 2)
    lvl2_left = seg([(30, seg([(30, leaf(30, 30))], 1))], 2)
    lvl2_right = seg([(11000, seg([(11000, leaf(11000, 11000, 53999))], 1))], 2)
    root = seg([(30, lvl2_left), (500, lvl2), (11000, lvl2_right)], 3)
    return root, lvl2, lvl1, target


def test_figure_walk():
    root, lvl2, lvl1, target = figure_tree()
    assert segment_route(root, 2333) is lvl2
    assert segment_route(lvl2, 2333) is lvl1
    assert segment_route(lvl1, 2333) is target
    assert target.hint(2333) == 1 and target.keys[1] == 2333
    assert h_lookup_probes(target, 2333) == (-2333, 1)
    assert lookup(root, 2333) == -2333
    assert lookup(root, 2334) is None


def test_empty_index_lookup():
    assert BucketIndex().lookup(5) is None
    assert BucketIndex().range_query(0, 10) == []


def test_collision_probe_counts():
    b = leaf(0, 3, 11, cap=8)   # both hint to slot 3
    assert b.keys[3] == 3 and b.keys[4] == 11
    assert h_lookup_probes(b, 3) == (-3, 1)
    assert h_lookup_probes(b, 11) == (-11, 2)
    # absent key with empty hint slot: one probe, early stop
    assert h_lookup_probes(b, 5) == (None, 1)
    # absent key hinting into the chain stops at the first empty slot
    assert h_lookup_probes(b, 19) == (None, 3)


def test_no_early_stop_scans_everything():
    b = leaf(0, 3, 11, cap=8)
    assert h_lookup_probes(b, 5, early_stop=False) == (None, 8)
    assert h_lookup(b, 11, early_stop=False) == -11


def test_k_below_all_pivots_routes_leftmost():
    s = seg([(100, leaf(100, 100)), (200, leaf(200, 200)), (300, leaf(300, 300))], 1)
    assert segment_route(s, 5).pivot == 100


def test_perfect_prediction():
    pivots = [1000 * i for i in range(64)]
    # one entry per S-Bucket: pivot -> index is exactly linear
    s = make_segment([(p, leaf(p, p)) for p in pivots], IndexConfig(sbucket_capacity=2, fill_ratio=0.5), 1)
    assert len(s.sbuckets) == 64
    for j, sb in enumerate(s.sbuckets):
        for _, p, _ in sb.live():
            assert model_predict_bucket(s.model, p, len(s.sbuckets)) == j


def flatten_bisect(pivots, children, k):
    i = bisect.bisect_right(pivots, k) - 1
    return children[max(i, 0)]


@given(st.lists(st.integers(0, 2**64 - 1), min_size=1, max_size=700, unique=True),
       st.lists(st.integers(0, 2**64 - 1), min_size=1, max_size=40),
       st.floats(0, 1e-10), st.floats(-50, 50))
def test_routing_matches_flatten_bisect(pivots, probes, slope, intercept):
    pivots.sort()
    children = [leaf(p) for p in pivots]
    s = make_segment(list(zip(pivots, children)), IndexConfig(), 1)
    # a deliberately wrong model must not change the answer, only the walk
    s_bad = make_segment(list(zip(pivots, children)), IndexConfig(), 1)
    s_bad.model = LinearModel(slope, intercept, pivots[0])
    for k in probes + pivots + [p + 1 for p in pivots if p < 2**64 - 1]:
        want = flatten_bisect(pivots, children, k)
        assert segment_route(s, k) is want
        assert segment_route(s_bad, k) is want


def test_routing_64_sbuckets_random_segments():
    rng = random.Random(4)
    for _ in range(1000):
        pivots = sorted(rng.sample(range(2**48), 614))
        children = [leaf(p) for p in pivots]
        s = make_segment(list(zip(pivots, children)), IndexConfig(), 1)
        assert len(s.sbuckets) == 64
        for k in (rng.randrange(2**48) for _ in range(5)):
            assert segment_route(s, k) is flatten_bisect(pivots, children, k)


@pytest.fixture(scope="module")
def loaded():
    keys = [int(k) for k in gen_synthetic("uniform", 20000, 1)]
    rng = random.Random(1)
    stored = sorted(rng.sample(keys, 10000))
    idx = BucketIndex.from_sorted([(k, value_for(k)) for k in stored],
                                  IndexConfig(dbucket_capacity=32, sbucket_capacity=4))
    oracle = SortedDict({k: value_for(k) for k in stored})
    return idx, oracle, keys


def test_lookup_against_oracle(loaded):
    idx, oracle, keys = loaded
    for k in keys:
        assert idx.lookup(k) == oracle.get(k)


def oracle_scan(oracle, start, n):
    i = oracle.bisect_left(start)
    return [(k, oracle[k]) for k in oracle.islice(i, i + n)]


def test_range_edges(loaded):
    idx, oracle, _ = loaded
    assert idx.range_query(oracle.keys()[5], 0) == []
    full = idx.range_query(0, len(oracle))
    assert full == list(oracle.items())


def test_range_random_against_oracle(loaded):
    idx, oracle, _ = loaded
    rng = random.Random(8)
    for _ in range(100):
        start = rng.randrange(2**64)
        n = rng.randrange(0, 3000)
        got = idx.range_query(start, n)
        assert got == oracle_scan(oracle, start, n)
        assert all(a[0] < b[0] for a, b in zip(got, got[1:]))


def test_range_with_executor(loaded):
    idx, oracle, _ = loaded
    rng = random.Random(9)
    with ThreadPoolExecutor(4) as pool:
        for _ in range(30):
            start = rng.randrange(2**64)
            n = rng.randrange(1, 2000)
            assert idx.range_query(start, n, executor=pool) == oracle_scan(oracle, start, n)


def test_range_probe_amortization(loaded):
    idx, oracle, _ = loaded
    stats = {}
    n = 10 * idx.cfg.dbucket_capacity
    start = oracle.keys()[1234]
    assert len(idx.range_query(start, n, stats)) == n
    assert stats["entries_copied"] / n <= 2
