"""Trace preprocessing pipeline, CSV ingestion and the synthetic generator."""

from .pipeline import (
    aggregate,
    clean,
    denormalize,
    encode_hour,
    encode_time,
    integrate,
    minmax_normalize,
    unify_records,
)
from .records import (
    CSV_COLUMNS,
    FeatureRange,
    NormalizationStats,
    RawRecord,
    UnifiedRecord,
    load_csv,
    save_csv,
)
from .synth import PRESETS, synthesize

__all__ = [
    "CSV_COLUMNS",
    "FeatureRange",
    "NormalizationStats",
    "PRESETS",
    "RawRecord",
    "UnifiedRecord",
    "aggregate",
    "clean",
    "denormalize",
    "encode_hour",
    "encode_time",
    "integrate",
    "load_csv",
    "minmax_normalize",
    "save_csv",
    "synthesize",
    "unify_records",
]
