"""Command-line front end: benchmarks, sweeps and verification runs.

Exit status: 0 success, 1 verification failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
import time

from .bench import make_workload, run_workload, source_keys, time_bulk_load, time_insert_loop
from .config import HintKind, IndexConfig
from .index import BucketIndex
from .harness import (STANDARD_RATIOS, SYNTHETIC_KINDS, differential_check, gen_synthetic,
                      parse_ratio, value_for)
from .metrics import MetricsReport, compute_o_mem, write_csv
from .segmentation import avg_group_error

ERRCURVE_COLUMNS = ["group_size", "avg_error", "avg_error_times_n", "key_error", "identity_ok"]
# o_mem_loaded: right after bulk loading; o_mem: after the op mix
SWEEP_COLUMNS = ["param", "value", "throughput", "o_mem_loaded", "o_mem", "height",
                 "dbucket_splits", "resegments", "merges"]
BREAKDOWN_COLUMNS = ["operation", "share_pct", "component", "component_pct"]
BULKLOAD_COLUMNS = ["n", "bulk_load_s", "bulk_load_mops", "insert_loop_s", "insert_loop_mops",
                    "speedup", "height"]
VERIFY_COLUMNS = ["distribution", "hint", "fill", "ratio", "ops", "passed", "op_index"]


def _ratio(text):
    try:
        return parse_ratio(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _positive_int(text):
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return n


def _common(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--keyset", help="binary key file (u64 count + u64 keys, little-endian)")
    src.add_argument("--synthetic", choices=["uniform", "lognormal", "piecewise"])
    p.add_argument("--bulk", type=_positive_int, default=1_000_000)
    p.add_argument("--ops", type=_positive_int, default=1_000_000)
    p.add_argument("--ratio", type=_ratio, default=(1, 1), help="read:write, e.g. 1:1")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--dbucket", type=int, help="D-Bucket slots")
    p.add_argument("--sbucket", type=int, help="S-Bucket entries")
    p.add_argument("--fill", type=float, help="initial fill ratio")
    p.add_argument("--corridor-error", type=float)
    p.add_argument("--theta", type=float, help="merge threshold")
    p.add_argument("--hint", choices=[h.value for h in HintKind])
    p.add_argument("--config", help="JSON file with IndexConfig fields")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", choices=["json", "csv"], default="json")


def _config(args) -> IndexConfig:
    cfg = IndexConfig.from_file(args.config) if args.config else IndexConfig()
    changes = {}
    for flag, name in (("dbucket", "dbucket_capacity"), ("sbucket", "sbucket_capacity"),
                       ("fill", "fill_ratio"), ("corridor_error", "corridor_error"),
                       ("theta", "merge_threshold"), ("hint", "hint_kind")):
        val = getattr(args, flag, None)
        if val is not None:
            changes[name] = HintKind(val) if name == "hint_kind" else val
    return cfg.with_(**changes)


def _keys(args, n):
    return source_keys(args.keyset, args.synthetic or "uniform", n, args.seed)


def _emit(args, payload, rows=None, columns=None):
    if args.report == "csv" and columns is not None:
        sys.stdout.write(write_csv(rows, columns))
    else:
        print(json.dumps(payload, indent=2, sort_keys=True, default=str))


def cmd_bench(args):
    cfg = _config(args)
    keys = _keys(args, args.bulk + args.ops)
    wl = make_workload(keys, args.bulk, args.ops, args.ratio, args.seed)
    index, report = run_workload(wl, cfg, args.threads)
    report.extra["config"] = cfg.to_dict()
    _emit(args, report.to_dict(), [report.csv_row()], MetricsReport.CSV_COLUMNS)
    return 0


def cmd_breakdown(args):
    cfg = _config(args)
    keys = _keys(args, args.bulk + args.ops)
    wl = make_workload(keys, args.bulk, args.ops, args.ratio, args.seed)
    _, report = run_workload(wl, cfg, 1)
    bd = report.breakdown
    rows = [
        {"operation": "get", "share_pct": bd["getSharePct"], "component": "segment_lookup",
         "component_pct": bd["segmentLookupPct"]},
        {"operation": "get", "share_pct": bd["getSharePct"], "component": "dbucket_lookup",
         "component_pct": bd["dbucketLookupPct"]},
        {"operation": "put", "share_pct": bd["putSharePct"], "component": "insert",
         "component_pct": bd["insertPct"]},
        {"operation": "put", "share_pct": bd["putSharePct"], "component": "memory_management",
         "component_pct": bd["memMgmtPct"]},
    ]
    _emit(args, {"rows": rows, "report": report.to_dict()}, rows, BREAKDOWN_COLUMNS)
    return 0


def errcurve_rows(keys, max_group=256):
    keys = [int(k) for k in keys]
    base = avg_group_error(keys, 1)
    rows = []
    n = 1
    while n <= max_group:
        e = avg_group_error(keys, n)
        rows.append({"group_size": n, "avg_error": e, "avg_error_times_n": e * n,
                     "key_error": base, "identity_ok": abs(e * n - base) <= 1e-9})
        n *= 2
    return rows


def cmd_errcurve(args):
    keys = source_keys(args.keyset, args.synthetic or "lognormal", args.n, args.seed)
    rows = errcurve_rows(keys, args.max_group)
    ok = all(r["identity_ok"] for r in rows)
    decreasing = all(a["avg_error"] > b["avg_error"] for a, b in zip(rows, rows[1:])) \
        or rows[0]["avg_error"] == 0
    _emit(args, {"rows": rows, "identity_ok": ok, "monotone_decreasing": decreasing},
          rows, ERRCURVE_COLUMNS)
    return 0 if ok and decreasing else 1


def cmd_sweep(args):
    base = _config(args)
    keys = _keys(args, args.bulk + args.ops)
    wl = make_workload(keys, args.bulk, args.ops, args.ratio, args.seed)
    field = {"dbucket": "dbucket_capacity", "sbucket": "sbucket_capacity", "fill": "fill_ratio"}[args.param]
    values = args.values or {"dbucket": [16, 64, 256, 1024], "sbucket": [4, 8, 16, 32],
                             "fill": [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]}[args.param]
    rows = []
    for val in values:
        val = float(val) if field == "fill_ratio" else int(val)
        cfg = base.with_(**{field: val})
        loaded = compute_o_mem(BucketIndex.from_sorted(wl.bulk, cfg, validate=False))
        index, report = run_workload(wl, cfg, args.threads)
        rows.append({"param": args.param, "value": val, "throughput": report.throughput,
                     "o_mem_loaded": loaded, "o_mem": compute_o_mem(index), "height": index.height,
                     **{k: index.stats.as_dict()[k] for k in ("dbucket_splits", "resegments", "merges")}})
    _emit(args, {"rows": rows}, rows, SWEEP_COLUMNS)
    return 0


def cmd_verify(args):
    base = _config(args)
    if args.all:
        grid = [(d, h, f, r) for d in SYNTHETIC_KINDS for h in (HintKind.MOD, HintKind.CLMUL)
                for f in (0.3, 0.6, 0.9) for r in STANDARD_RATIOS]
    else:
        grid = [(args.synthetic or "uniform", base.hint_kind, base.fill_ratio, args.ratio)]
    rows = []
    failed = False
    for i, (dist, hint, fill, ratio) in enumerate(grid):
        if args.keyset:
            keys = source_keys(args.keyset, n=args.bulk + args.ops, seed=args.seed)
        else:
            keys = gen_synthetic(dist, args.bulk + args.ops, args.seed + i)
        wl = make_workload(keys, args.bulk, args.ops, ratio, args.seed + i, args.scan_fraction)
        res = differential_check(wl, base.with_(hint_kind=hint, fill_ratio=fill))
        rows.append({"distribution": dist, "hint": HintKind(hint).value, "fill": fill,
                     "ratio": "%d:%d" % ratio, "ops": len(wl), "passed": res.passed,
                     "op_index": None if res.passed else res.divergence["op_index"]})
        if not res.passed:
            failed = True
            if not args.keep_going:
                rows[-1]["divergence"] = res.divergence
                break
    _emit(args, {"rows": rows, "passed": not failed}, rows, VERIFY_COLUMNS)
    return 1 if failed else 0


def cmd_bulkload_bench(args):
    cfg = _config(args)
    keys = [int(k) for k in _keys(args, args.bulk)]
    pairs = [(k, value_for(k)) for k in keys]
    index, t_bulk = time_bulk_load(pairs, cfg)
    row = {"n": len(pairs), "bulk_load_s": t_bulk, "bulk_load_mops": len(pairs) / t_bulk / 1e6,
           "height": index.height, "insert_loop_s": None, "insert_loop_mops": None, "speedup": None}
    if args.compare:
        shuffled = pairs[:]
        random.Random(args.seed).shuffle(shuffled)
        _, t_ins = time_insert_loop(shuffled, cfg)
        row.update(insert_loop_s=t_ins, insert_loop_mops=len(pairs) / t_ins / 1e6,
                   speedup=t_ins / t_bulk)
    _emit(args, row, [row], BULKLOAD_COLUMNS)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="bucket-index", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="bulk load then run a read/write mix")
    _common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("breakdown", help="time breakdown of get/put")
    _common(p)
    p.set_defaults(func=cmd_breakdown)

    p = sub.add_parser("errcurve", help="average prediction error vs group size (lognormal default)")
    _common(p)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--max-group", type=int, default=256)
    p.set_defaults(func=cmd_errcurve)

    p = sub.add_parser("sweep", help="throughput and memory over one tunable")
    _common(p)
    p.add_argument("--param", choices=["dbucket", "sbucket", "fill"], default="fill")
    p.add_argument("--values", nargs="+", type=float)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="differential check against an ordered map")
    _common(p)
    p.add_argument("--all", action="store_true",
                   help="every ratio x distribution x hint x fill ratio")
    p.add_argument("--scan-fraction", type=float, default=0.0)
    p.add_argument("--keep-going", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bulkload-bench", help="bulk load throughput")
    _common(p)
    p.add_argument("--compare", action="store_true", help="also time a per-key insert loop")
    p.set_defaults(func=cmd_bulkload_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        cfg = _config(args)
    except (ValueError, OSError) as exc:
        parser.error(str(exc))
    del cfg
    t0 = time.perf_counter()
    code = args.func(args)
    print(f"# {args.command} finished in {time.perf_counter() - t0:.2f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
