"""Deterministic pipelines: events to metrics, KPIs, traits, interactions."""

from .checks import CheckReport, Finding, run_checks
from .runner import OUTPUT_TABLES, ChecksFailed, load_reports, run_pipeline
from .sessions import sessionize, total_duration_ms
from .transforms import (
    CorruptInput,
    active_invalid_ids,
    aggregate_kpis,
    compute_metrics,
    date_of_ms,
    derive_traits,
    extract_interactions,
    filter_excluded,
)

__all__ = [
    "CheckReport",
    "ChecksFailed",
    "CorruptInput",
    "Finding",
    "OUTPUT_TABLES",
    "active_invalid_ids",
    "aggregate_kpis",
    "compute_metrics",
    "date_of_ms",
    "derive_traits",
    "extract_interactions",
    "filter_excluded",
    "load_reports",
    "run_checks",
    "run_pipeline",
    "sessionize",
    "total_duration_ms",
]
