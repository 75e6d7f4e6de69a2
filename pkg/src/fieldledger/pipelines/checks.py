"""Validation rules that run alongside the transforms and can abort a run."""

from __future__ import annotations

from dataclasses import dataclass, field

from .transforms import date_of_ms

MIN_TS_MS = 1_420_070_400_000  # 2015-01-01T00:00:00Z
MAX_SAMPLE = 10
DAY_MS = 86_400_000


@dataclass
class Finding:
    rule: str
    severity: str  # warn | error
    count: int
    sample: list

    def to_wire(self) -> dict:
        return {
            "rule": self.rule,
            "severity": self.severity,
            "count": self.count,
            "sample": self.sample,
        }


@dataclass
class CheckReport:
    stage: str
    findings: list[Finding] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        if any(f.severity == "error" for f in self.findings):
            return "fail"
        if self.findings:
            return "pass_with_warnings"
        return "pass"

    def to_wire(self) -> dict:
        return {
            "stage": self.stage,
            "findings": [f.to_wire() for f in self.findings],
            "verdict": self.verdict,
        }


def _finding(report, rule, severity, offenders):
    if offenders:
        report.findings.append(
            Finding(rule, severity, len(offenders), offenders[:MAX_SAMPLE])
        )


def _r1_empty_subjects(report: CheckReport, rows: list[dict], fields: tuple[str, ...]):
    offenders = []
    for i, row in enumerate(rows):
        for f in fields:
            value = row.get(f)
            if value is None or value == "":
                offenders.append({"row": i, "field": f})
    _finding(report, "R1", "error", offenders)


def _r2_ts_window(report: CheckReport, events: list[dict], run_start_ms: int):
    hi = run_start_ms + DAY_MS
    offenders = [
        {"event_id": e["event_id"], "adjusted_ts": e["adjusted_ts"]}
        for e in events
        if not MIN_TS_MS <= e["adjusted_ts"] <= hi
    ]
    _finding(report, "R2", "warn", offenders)


def _r3_duplicate_keys(report: CheckReport, metric_rows: list[dict]):
    seen = set()
    offenders = []
    for row in metric_rows:
        key = (row["subject_kind"], row["subject_id"], row["date"], row["metric"])
        if key in seen:
            offenders.append(list(key))
        seen.add(key)
    _finding(report, "R3", "error", offenders)


def _r4_kpi_reconciliation(
    report: CheckReport, kpi_rows: list[dict], metric_rows: list[dict]
):
    per_date: dict[str, int] = {}
    for row in metric_rows:
        if row["subject_kind"] == "user" and row["metric"] == "event_count":
            per_date[row["date"]] = per_date.get(row["date"], 0) + row["value"]
    offenders = []
    for row in kpi_rows:
        if row["kpi"] != "total_events":
            continue
        expected = per_date.get(row["date"], 0)
        if row["value"] != expected:
            offenders.append(
                {"date": row["date"], "kpi": row["value"], "metrics": expected}
            )
    _finding(report, "R4", "error", offenders)


def _r5_provenance(report: CheckReport, interactions: list[dict], events: list[dict]):
    known = {e["event_id"] for e in events}
    offenders = [
        {"event_id": r["event_id"]}
        for r in interactions
        if r["event_id"] not in known
    ]
    _finding(report, "R5", "error", offenders)


def _r6_count_sanity(report: CheckReport, interactions: list[dict], events: list[dict]):
    if len(interactions) > len(events):
        report.findings.append(
            Finding(
                "R6",
                "error",
                1,
                [{"interactions": len(interactions), "events": len(events)}],
            )
        )


def run_checks(stage: str, inputs: dict, outputs: dict) -> CheckReport:
    """Evaluate the built-in rule set for one stage.

    inputs/outputs carry whatever the stage consumed and produced:
    events, metric_rows, kpi_rows, trait_rows, interaction_rows,
    run_start_ms. Failures are verdicts, never exceptions.
    """
    report = CheckReport(stage=stage)
    if stage == "metrics":
        _r1_empty_subjects(report, outputs["metric_rows"], ("subject_id",))
        _r2_ts_window(report, inputs["events"], inputs["run_start_ms"])
        _r3_duplicate_keys(report, outputs["metric_rows"])
    elif stage == "kpis":
        _r4_kpi_reconciliation(
            report, outputs["kpi_rows"], inputs["metric_rows"]
        )
    elif stage == "traits":
        _r1_empty_subjects(report, outputs["trait_rows"], ("subject_id",))
    elif stage == "interactions":
        _r1_empty_subjects(
            report, outputs["interaction_rows"], ("user_id", "content_id")
        )
        _r5_provenance(report, outputs["interaction_rows"], inputs["events"])
        _r6_count_sanity(report, outputs["interaction_rows"], inputs["events"])
    else:
        raise ValueError(f"unknown stage {stage!r}")
    return report
