"""Transforms from raw events to metrics, KPIs, traits, and interactions.

Every function here is a pure, deterministic map from pinned input rows to
sorted output rows: same inputs, byte-identical outputs.
"""

from __future__ import annotations

from datetime import timedelta, timezone, datetime

from ..events import SchemaCatalog, builtin_catalog, epoch_ms_to_instant
from .sessions import DEFAULT_GAP_MINUTES, sessionize, total_duration_ms

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)

USER_METRICS = (
    "event_count",
    "session_count",
    "active_minutes",
    "content_views",
    "content_completions",
    "purchases",
    "offline_event_fraction",
)
CONTENT_METRICS = ("views", "completions", "unique_viewers")
KPIS = ("dau", "total_events", "total_purchases", "avg_session_minutes",
        "offline_fraction")
USER_TRAITS = ("first_seen", "last_seen", "days_active", "favorite_kind")
CONTENT_TRAITS = ("total_views", "unique_viewers", "first_viewed")

INTERACTION_KINDS = {
    "content_view": "view",
    "content_complete": "complete",
    "purchase": "purchase",
}


class CorruptInput(Exception):
    """An event row violates the shape ingestion guarantees; refuse to guess."""


def date_of_ms(ms: int) -> str:
    """UTC calendar day of an epoch-ms instant."""
    return (_EPOCH + timedelta(milliseconds=ms)).date().isoformat()


def active_invalid_ids(flag_rows: list[dict]) -> set[str]:
    """Event ids excluded by curation: any actor's newest verdict is invalid."""
    latest: dict[tuple[str, str], str] = {}
    for row in flag_rows:
        latest[(row["event_id"], row["actor"])] = row["verdict"]
    return {event_id for (event_id, _), v in latest.items() if v == "invalid"}


def _check_row(event: dict) -> None:
    ok = (
        isinstance(event, dict)
        and isinstance(event.get("event_id"), str)
        and isinstance(event.get("user_id"), str)
        and isinstance(event.get("kind"), str)
        and isinstance(event.get("adjusted_ts"), int)
        and isinstance(event.get("connectivity"), dict)
        and isinstance(event["connectivity"].get("online"), bool)
    )
    if not ok:
        raise CorruptInput(f"event row is not ingestion-shaped: {event!r}")


def filter_excluded(events: list[dict], flag_rows: list[dict]) -> list[dict]:
    excluded = active_invalid_ids(flag_rows)
    return [e for e in events if e["event_id"] not in excluded]


def content_ref_field(catalog: SchemaCatalog, kind: str, version: int):
    """Name of the schema's content_ref field, or None if it declares none."""
    schema = catalog.lookup(kind, version)
    if schema is None:
        return None
    for name, ftype in schema.field_types.items():
        if ftype == "content_ref":
            return name
    return None


def _content_ref(event: dict, catalog: SchemaCatalog):
    field = content_ref_field(catalog, event["kind"], event["schema_version"])
    if field is None:
        return None
    return event["payload"].get(field)


def compute_metrics(
    events: list[dict],
    flag_rows: list[dict],
    *,
    gap_minutes: int = DEFAULT_GAP_MINUTES,
    catalog: SchemaCatalog | None = None,
) -> list[dict]:
    """Per-subject per-day metric rows for users and contents."""
    catalog = catalog or builtin_catalog()
    kept = filter_excluded(events, flag_rows)
    for event in kept:
        _check_row(event)

    by_user_day: dict[tuple[str, str], list[dict]] = {}
    by_content_day: dict[tuple[str, str], list[dict]] = {}
    for event in kept:
        date = date_of_ms(event["adjusted_ts"])
        by_user_day.setdefault((event["user_id"], date), []).append(event)
        if event["kind"] in ("content_view", "content_complete"):
            ref = _content_ref(event, catalog)
            if ref is not None:
                by_content_day.setdefault((ref, date), []).append(event)

    rows: list[dict] = []

    def emit(subject_kind, subject_id, date, metric, value):
        rows.append(
            {
                "subject_kind": subject_kind,
                "subject_id": subject_id,
                "date": date,
                "metric": metric,
                "value": value,
            }
        )

    for (user_id, date) in sorted(by_user_day):
        day = sorted(
            by_user_day[(user_id, date)],
            key=lambda e: (e["adjusted_ts"], e["event_id"]),
        )
        n = len(day)
        sessions = sessionize(day, gap_minutes)
        offline = sum(1 for e in day if not e["connectivity"]["online"])
        emit("user", user_id, date, "event_count", n)
        emit("user", user_id, date, "session_count", len(sessions))
        # integer ms summed first, divided once: bit-stable across reorderings
        emit("user", user_id, date, "active_minutes",
             total_duration_ms(sessions) / 60_000)
        emit("user", user_id, date, "content_views",
             sum(1 for e in day if e["kind"] == "content_view"))
        emit("user", user_id, date, "content_completions",
             sum(1 for e in day if e["kind"] == "content_complete"))
        emit("user", user_id, date, "purchases",
             sum(1 for e in day if e["kind"] == "purchase"))
        emit("user", user_id, date, "offline_event_fraction", offline / n)

    for (content_id, date) in sorted(by_content_day):
        day = by_content_day[(content_id, date)]
        views = [e for e in day if e["kind"] == "content_view"]
        emit("content", content_id, date, "views", len(views))
        emit("content", content_id, date, "completions",
             sum(1 for e in day if e["kind"] == "content_complete"))
        emit("content", content_id, date, "unique_viewers",
             len({e["user_id"] for e in views}))

    rows.sort(key=lambda r: (r["subject_kind"], r["subject_id"], r["date"], r["metric"]))
    return rows


def _date_range(dates: list[str]) -> list[str]:
    first = datetime.strptime(min(dates), "%Y-%m-%d").date()
    last = datetime.strptime(max(dates), "%Y-%m-%d").date()
    out = []
    day = first
    while day <= last:
        out.append(day.isoformat())
        day += timedelta(days=1)
    return out


def aggregate_kpis(metric_rows: list[dict]) -> list[dict]:
    """Date-level KPI rows computed from user MetricRows alone.

    offline_fraction recovers each user-day's integer offline count from
    offline_event_fraction x event_count, so the ratio equals a raw-event
    recount exactly, not just approximately.
    """
    by_date: dict[str, dict[str, dict[str, float]]] = {}
    for row in metric_rows:
        if row["subject_kind"] != "user":
            continue
        per_user = by_date.setdefault(row["date"], {}).setdefault(
            row["subject_id"], {}
        )
        per_user[row["metric"]] = row["value"]

    rows: list[dict] = []
    if not by_date:
        return rows
    for date in _date_range(sorted(by_date)):
        users = by_date.get(date, {})
        event_total = sum(u["event_count"] for u in users.values())
        session_total = sum(u["session_count"] for u in users.values())
        minutes_total = sum(u["active_minutes"] for u in users.values())
        offline_total = sum(
            round(u["offline_event_fraction"] * u["event_count"])
            for u in users.values()
        )
        values = {
            "dau": sum(1 for u in users.values() if u["event_count"] >= 1),
            "total_events": event_total,
            "total_purchases": sum(u["purchases"] for u in users.values()),
            "avg_session_minutes": (
                minutes_total / session_total if session_total else 0.0
            ),
            "offline_fraction": (
                offline_total / event_total if event_total else 0.0
            ),
        }
        for kpi in KPIS:
            rows.append({"date": date, "kpi": kpi, "value": values[kpi]})
    rows.sort(key=lambda r: (r["date"], r["kpi"]))
    return rows


def derive_traits(
    events: list[dict],
    metric_rows: list[dict],
    *,
    catalog: SchemaCatalog | None = None,
) -> list[dict]:
    """All-time dimensional rows per user and per content."""
    catalog = catalog or builtin_catalog()
    rows: list[dict] = []

    def emit(subject_kind, subject_id, trait, value):
        rows.append(
            {
                "subject_kind": subject_kind,
                "subject_id": subject_id,
                "trait": trait,
                "value": value,
            }
        )

    by_user: dict[str, list[dict]] = {}
    for event in events:
        by_user.setdefault(event["user_id"], []).append(event)
    active_days: dict[str, int] = {}
    daily_views: dict[str, int] = {}
    for row in metric_rows:
        if row["subject_kind"] == "user" and row["metric"] == "event_count":
            if row["value"] >= 1:
                active_days[row["subject_id"]] = active_days.get(row["subject_id"], 0) + 1
        if row["subject_kind"] == "content" and row["metric"] == "views":
            daily_views[row["subject_id"]] = daily_views.get(row["subject_id"], 0) + row["value"]

    for user_id in sorted(by_user):
        stamps = [e["adjusted_ts"] for e in by_user[user_id]]
        emit("user", user_id, "first_seen", epoch_ms_to_instant(min(stamps)))
        emit("user", user_id, "last_seen", epoch_ms_to_instant(max(stamps)))
        emit("user", user_id, "days_active", active_days.get(user_id, 0))
        counts: dict[str, int] = {}
        for event in by_user[user_id]:
            counts[event["kind"]] = counts.get(event["kind"], 0) + 1
        top = max(counts.values())
        favorite = min(kind for kind, c in counts.items() if c == top)
        emit("user", user_id, "favorite_kind", favorite)

    viewers: dict[str, set[str]] = {}
    first_view: dict[str, int] = {}
    contents: set[str] = set()
    for event in events:
        if event["kind"] not in ("content_view", "content_complete"):
            continue
        ref = _content_ref(event, catalog)
        if ref is None:
            continue
        contents.add(ref)
        if event["kind"] == "content_view":
            viewers.setdefault(ref, set()).add(event["user_id"])
            ts = event["adjusted_ts"]
            if ref not in first_view or ts < first_view[ref]:
                first_view[ref] = ts

    for content_id in sorted(contents):
        emit("content", content_id, "total_views", daily_views.get(content_id, 0))
        emit("content", content_id, "unique_viewers",
             len(viewers.get(content_id, set())))
        # a content nobody has viewed yet has no first_viewed to report
        if content_id in first_view:
            emit("content", content_id, "first_viewed",
                 epoch_ms_to_instant(first_view[content_id]))

    rows.sort(key=lambda r: (r["subject_kind"], r["subject_id"], r["trait"]))
    return rows


def extract_interactions(
    events: list[dict], *, catalog: SchemaCatalog | None = None
) -> list[dict]:
    """One row per event whose schema declares a content_ref that is present."""
    catalog = catalog or builtin_catalog()
    rows = []
    for event in events:
        interaction = INTERACTION_KINDS.get(event["kind"])
        if interaction is None:
            continue
        ref = _content_ref(event, catalog)
        if ref is None:
            continue
        rows.append(
            {
                "user_id": event["user_id"],
                "content_id": ref,
                "adjusted_ts": event["adjusted_ts"],
                "interaction_type": interaction,
                "event_id": event["event_id"],
            }
        )
    rows.sort(key=lambda r: (r["adjusted_ts"], r["event_id"]))
    return rows
