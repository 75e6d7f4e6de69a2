"""Pipeline runner: staged transforms, checks, all-or-nothing commit."""

from __future__ import annotations

import json
import time
from pathlib import Path
from typing import Optional

from ..events import SchemaCatalog, builtin_catalog, epoch_ms_to_instant
from ..store import Store
from ..tracker import RunTracker
from .checks import CheckReport, run_checks
from .sessions import DEFAULT_GAP_MINUTES
from .transforms import (
    aggregate_kpis,
    compute_metrics,
    derive_traits,
    extract_interactions,
    filter_excluded,
)

OUTPUT_TABLES = ("user_metrics", "content_metrics", "kpis", "traits", "interactions")


class ChecksFailed(Exception):
    def __init__(self, report: CheckReport):
        super().__init__(f"stage {report.stage} failed checks")
        self.report = report


def run_pipeline(
    data_dir: str | Path,
    *,
    events_version: Optional[int] = None,
    flags_version: Optional[int] = None,
    gap_minutes: int = DEFAULT_GAP_MINUTES,
    catalog: Optional[SchemaCatalog] = None,
    now_ms: Optional[int] = None,
    store: Optional[Store] = None,
    tracker: Optional[RunTracker] = None,
) -> dict:
    """Recompute every output family from a pinned (events, flags) snapshot.

    Commits nothing unless every stage's checks pass; the run is recorded
    in the tracker either way, so failures leave an inspectable trail.
    """
    start_ms = int(time.time() * 1000) if now_ms is None else now_ms
    store = store or Store(data_dir)
    tracker = tracker or RunTracker(data_dir, store=store)
    catalog = catalog or builtin_catalog()

    events_table = store.table("events")
    flags_table = store.table("curation_flags")
    if events_version is None:
        events_version = events_table.latest()
    if flags_version is None:
        flags_version = flags_table.latest()

    run = tracker.create_run(
        "pipeline",
        [("events", events_version), ("curation_flags", flags_version)],
        params={
            "events_version": str(events_version),
            "flags_version": str(flags_version),
            "gap_minutes": str(gap_minutes),
        },
        now_ms=start_ms,
    )
    run_id = run["run_id"]

    events = events_table.read_at(events_version)
    flag_rows = flags_table.read_at(flags_version)
    kept = filter_excluded(events, flag_rows)

    # capture output baselines before the (slow) transforms so a concurrent
    # run surfaces as VersionConflict instead of silent interleaving
    baselines = {name: store.table(name).latest() for name in OUTPUT_TABLES}

    reports: list[CheckReport] = []

    def checked(stage: str, inputs: dict, outputs: dict) -> None:
        report = run_checks(stage, inputs, outputs)
        reports.append(report)
        if report.verdict == "fail":
            _record(tracker, run_id, reports, status="failed", stage=stage)
            raise ChecksFailed(report)

    metric_rows = compute_metrics(
        events, flag_rows, gap_minutes=gap_minutes, catalog=catalog
    )
    checked(
        "metrics",
        {"events": kept, "run_start_ms": start_ms},
        {"metric_rows": metric_rows},
    )

    kpi_rows = aggregate_kpis(metric_rows)
    checked("kpis", {"metric_rows": metric_rows}, {"kpi_rows": kpi_rows})

    trait_rows = derive_traits(kept, metric_rows, catalog=catalog)
    checked("traits", {}, {"trait_rows": trait_rows})

    interaction_rows = extract_interactions(kept, catalog=catalog)
    checked(
        "interactions",
        {"events": kept},
        {"interaction_rows": interaction_rows},
    )

    outputs_by_table = {
        "user_metrics": [r for r in metric_rows if r["subject_kind"] == "user"],
        "content_metrics": [r for r in metric_rows if r["subject_kind"] == "content"],
        "kpis": kpi_rows,
        "traits": trait_rows,
        "interactions": interaction_rows,
    }
    op_meta = {
        "run_id": run_id,
        "events_version": events_version,
        "flags_version": flags_version,
    }
    committed: dict[str, int] = {}
    for name in OUTPUT_TABLES:
        rows = outputs_by_table[name]
        if not rows:
            # the store refuses empty commits; a None version plus the
            # rows_* metric below says "this family is empty at this run"
            committed[name] = None
            continue
        committed[name] = store.table(name).commit(
            rows,
            expected_version=baselines[name],
            op_meta=op_meta,
            committed_at=start_ms,
        )

    for name in OUTPUT_TABLES:
        tracker.log_metric(run_id, f"rows_{name}", len(outputs_by_table[name]), 0)
    warn_count = sum(
        f.count for r in reports for f in r.findings if f.severity == "warn"
    )
    tracker.log_metric(run_id, "check_warnings", warn_count, 0)
    _record(tracker, run_id, reports, status="finished", outputs=committed)

    return {
        "run_id": run_id,
        "input": {"events": events_version, "curation_flags": flags_version},
        "outputs": committed,
        "started": epoch_ms_to_instant(start_ms),
        "check_reports": [r.to_wire() for r in reports],
    }


def _record(tracker, run_id, reports, *, status, stage=None, outputs=None):
    params = {"check_reports": json.dumps([r.to_wire() for r in reports])}
    if stage is not None:
        params["failed_stage"] = stage
    if outputs is not None:
        params["outputs"] = json.dumps(outputs)
    tracker.set_params(run_id, params)
    tracker.finalize_run(run_id, status)


def load_reports(tracker: RunTracker, run_id: str) -> list[dict]:
    """CheckReports recorded for a pipeline run."""
    doc = tracker.get_run(run_id)
    raw = doc["params"].get("check_reports")
    return json.loads(raw) if raw else []
