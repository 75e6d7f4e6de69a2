import random

import pytest

from fieldledger.events import UlidFactory
from fieldledger.pipelines import (
    ChecksFailed,
    aggregate_kpis,
    compute_metrics,
    extract_interactions,
    run_checks,
    run_pipeline,
)
from fieldledger.service import IngestionService
from fieldledger.tracker import RunTracker

from corpus import generate_corpus, ingest_corpus, make_envelope
from test_pipelines import BASE_MS, ev


@pytest.fixture
def stage_data():
    events = [
        ev(user="u1", kind="content_view", ts_ms=BASE_MS,
           payload={"content_id": "c1"}, eid="e1"),
        ev(user="u2", ts_ms=BASE_MS + 60_000, eid="e2"),
        ev(user="u1", kind="purchase", ts_ms=BASE_MS + 120_000,
           payload={"amount": 2.0, "currency": "USD"}, eid="e3"),
    ]
    metric_rows = compute_metrics(events, [])
    kpi_rows = aggregate_kpis(metric_rows)
    interaction_rows = extract_interactions(events)
    return events, metric_rows, kpi_rows, interaction_rows


def test_clean_run_passes(stage_data):
    events, metric_rows, kpi_rows, interaction_rows = stage_data
    report = run_checks(
        "metrics",
        {"events": events, "run_start_ms": BASE_MS + 10_000},
        {"metric_rows": metric_rows},
    )
    assert report.verdict == "pass"
    assert report.findings == []
    assert run_checks(
        "kpis", {"metric_rows": metric_rows}, {"kpi_rows": kpi_rows}
    ).verdict == "pass"
    assert run_checks(
        "interactions",
        {"events": events},
        {"interaction_rows": interaction_rows},
    ).verdict == "pass"


def test_r1_empty_subject(stage_data):
    events, metric_rows, *_ = stage_data
    metric_rows[0] = dict(metric_rows[0], subject_id="")
    report = run_checks(
        "metrics",
        {"events": events, "run_start_ms": BASE_MS},
        {"metric_rows": metric_rows},
    )
    assert report.verdict == "fail"
    assert [f.rule for f in report.findings if f.severity == "error"] == ["R1"]


def test_r2_timestamp_window_warns(stage_data):
    events, metric_rows, *_ = stage_data
    stale = ev(ts_ms=1_200_000_000_000, eid="old")  # 2008: before the floor
    ahead = ev(ts_ms=BASE_MS + 3 * 86_400_000, eid="soon")  # 3 days past start
    report = run_checks(
        "metrics",
        {"events": events + [stale, ahead], "run_start_ms": BASE_MS},
        {"metric_rows": metric_rows},
    )
    assert report.verdict == "pass_with_warnings"
    finding = report.findings[0]
    assert finding.rule == "R2" and finding.severity == "warn"
    assert finding.count == 2
    assert {o["event_id"] for o in finding.sample} == {"old", "soon"}


def test_r3_duplicate_metric_key(stage_data):
    events, metric_rows, *_ = stage_data
    report = run_checks(
        "metrics",
        {"events": events, "run_start_ms": BASE_MS},
        {"metric_rows": metric_rows + [metric_rows[0]]},
    )
    assert report.verdict == "fail"
    assert any(f.rule == "R3" for f in report.findings)


def test_r4_kpi_perturbation_names_the_date(stage_data):
    _, metric_rows, kpi_rows, _ = stage_data
    mutated = [
        dict(r, value=r["value"] + 1)
        if r["kpi"] == "total_events"
        else r
        for r in kpi_rows
    ]
    report = run_checks("kpis", {"metric_rows": metric_rows}, {"kpi_rows": mutated})
    assert report.verdict == "fail"
    finding = next(f for f in report.findings if f.rule == "R4")
    assert finding.sample[0]["date"] == "2022-03-01"


def test_r5_unknown_provenance(stage_data):
    events, _, _, interaction_rows = stage_data
    forged = dict(interaction_rows[0], event_id="ghost")
    report = run_checks(
        "interactions",
        {"events": events},
        {"interaction_rows": interaction_rows + [forged]},
    )
    assert report.verdict == "fail"
    assert any(f.rule == "R5" for f in report.findings)


def test_r6_count_sanity(stage_data):
    events, _, _, interaction_rows = stage_data
    bloated = interaction_rows * 4
    report = run_checks(
        "interactions",
        {"events": events},
        {"interaction_rows": bloated},
    )
    # R5 passes (same provenance) but R6 catches the inflation
    assert any(f.rule == "R6" and f.severity == "error" for f in report.findings)
    assert report.verdict == "fail"


def test_sample_capped_at_ten(stage_data):
    events, metric_rows, *_ = stage_data
    mutated = [dict(r, subject_id="") for r in metric_rows] * 3
    report = run_checks(
        "metrics",
        {"events": events, "run_start_ms": BASE_MS},
        {"metric_rows": mutated},
    )
    finding = next(f for f in report.findings if f.rule == "R1")
    assert finding.count == len(mutated)
    assert len(finding.sample) == 10


def test_unknown_stage():
    with pytest.raises(ValueError):
        run_checks("nonsense", {}, {})


# -- abort safety through run_pipeline ------------------------------------------


def test_fail_aborts_before_any_commit(tmp_path, monkeypatch):
    service = IngestionService(tmp_path / "data")
    ingest_corpus(
        service,
        generate_corpus(seed=31, n_events=120, n_users=5, n_contents=4, n_days=3),
    )
    root = service.store.root
    clean = run_pipeline(root, store=service.store)
    latest_before = {
        name: service.store.table(name).latest() for name in clean["outputs"]
    }

    import fieldledger.pipelines.runner as runner_mod

    real = runner_mod.compute_metrics

    def sabotage(*args, **kwargs):
        rows = real(*args, **kwargs)
        return rows + [rows[0]]  # duplicate key: R3 must fail the run

    monkeypatch.setattr(runner_mod, "compute_metrics", sabotage)
    with pytest.raises(ChecksFailed) as exc:
        run_pipeline(root, store=service.store)
    assert exc.value.report.stage == "metrics"
    assert exc.value.report.verdict == "fail"

    for name, version in latest_before.items():
        assert service.store.table(name).latest() == version, name

    # the failed run is still inspectable in the tracker
    tracker = RunTracker(root, store=service.store)
    failed = [r for r in tracker.list_runs() if r["status"] == "failed"]
    assert len(failed) == 1
    assert failed[0]["params"]["failed_stage"] == "metrics"


def test_warning_does_not_abort(tmp_path):
    service = IngestionService(tmp_path / "data")
    # one event far in the past: R2 warns but the run commits
    old = make_envelope(
        random.Random(7),
        UlidFactory(rng=random.Random(8)),
        user_id="u1",
        kind="page_view",
        ts_ms=1_200_000_000_000,
    )
    ingest_corpus(service, [old])
    result = run_pipeline(service.store.root, store=service.store)
    report = next(r for r in result["check_reports"] if r["stage"] == "metrics")
    assert report["verdict"] == "pass_with_warnings"
    assert result["outputs"]["user_metrics"] is not None
