"""Updatable learned index with hint-addressed, locally unsorted buckets."""
from .bulkload import bulk_load, build_level
from .config import HintKind, IndexConfig
from .index import BucketIndex, Reader
from .nodes import DBucket, LinearModel, SBucket, Segment, range_of
from .segmentation import (
    Cut,
    avg_group_error,
    fit_segment_model,
    greedy_corridor,
    model_predict_bucket,
)
from .write import InsertOutcome, SmoStats, dbucket_split, h_insert, quickselect_median

__all__ = [
    "BucketIndex", "Reader", "IndexConfig", "HintKind", "bulk_load", "build_level",
    "DBucket", "SBucket", "Segment", "LinearModel", "range_of", "Cut",
    "avg_group_error", "fit_segment_model", "greedy_corridor", "model_predict_bucket",
    "InsertOutcome", "SmoStats", "dbucket_split", "h_insert", "quickselect_median",
]
