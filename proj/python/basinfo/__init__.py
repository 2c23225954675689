"""Hydro-meteorological series management: ingest, analysis, gap filling and storage."""

from ._core import (
    BasinfoError,
    Database,
    Series,
    aggregate,
    availability,
    basic_stats,
    correlate,
    detect_gaps,
    detect_outliers,
    export_series,
    fill_idw,
    fill_regression,
    fill_temporal_linear,
    linear_trend,
    overlap_period,
    parse_series,
    series_digest,
)

__all__ = [
    "BasinfoError",
    "Database",
    "Series",
    "aggregate",
    "availability",
    "basic_stats",
    "correlate",
    "detect_gaps",
    "detect_outliers",
    "export_series",
    "fill_idw",
    "fill_regression",
    "fill_temporal_linear",
    "linear_trend",
    "overlap_period",
    "parse_series",
    "series_digest",
]
