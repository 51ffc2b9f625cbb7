"""
Feature pipeline: dataset preparation, per-flow features, chronological
split and balanced batching.
"""

from .correlation import correlation_report, write_correlation_report
from .extract import (
    AGGREGATE_COLUMNS,
    FEATURE_COLUMNS,
    FeatureBuilder,
    FeatureVector,
    Observation,
    build_matrix,
    extract_features,
    feature_frame,
    observations_from_frame,
    observations_from_records,
)
from .prepare import DROPPED_COLUMNS, check_sorted, prepare
from .split import SplitResult, balanced_batches, batch_indices, chronological_split, labels_of, timestamps_of

__all__ = [
    "AGGREGATE_COLUMNS",
    "DROPPED_COLUMNS",
    "FEATURE_COLUMNS",
    "FeatureBuilder",
    "FeatureVector",
    "Observation",
    "SplitResult",
    "balanced_batches",
    "batch_indices",
    "build_matrix",
    "check_sorted",
    "chronological_split",
    "correlation_report",
    "extract_features",
    "feature_frame",
    "labels_of",
    "observations_from_frame",
    "observations_from_records",
    "prepare",
    "timestamps_of",
    "write_correlation_report",
]
