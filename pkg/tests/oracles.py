"""Independent brute-force recomputation of every pipeline output family.

Deliberately shares no code with the package: its own date math, its own
session scan, its own catalog read. Slow nested loops are the point.
"""

import json
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

GAP_MS = 30 * 60_000
DAY_MS = 86_400_000

_CATALOG_PATH = Path(__file__).resolve().parent.parent / "config" / "schema_catalog.json"


def content_field_map():
    """(kind, version) -> payload field name holding a content reference."""
    doc = json.loads(_CATALOG_PATH.read_text())
    mapping = {}
    for schema in doc["schemas"]:
        for name, ftype in schema["required_fields"] + schema["optional_fields"]:
            if ftype == "content_ref":
                mapping[(schema["kind"], schema["version"])] = name
    return mapping


_CONTENT_FIELD = content_field_map()


def day_of(ms):
    return (date(1970, 1, 1) + timedelta(days=ms // DAY_MS)).isoformat()


def iso_utc(ms):
    dt = datetime(1970, 1, 1, tzinfo=timezone.utc) + timedelta(seconds=ms // 1000)
    return dt.strftime("%Y-%m-%dT%H:%M:%S") + f".{ms % 1000:03d}Z"


def content_of(event):
    field = _CONTENT_FIELD.get((event["kind"], event["schema_version"]))
    if field is None:
        return None
    return event["payload"].get(field)


def excluded_ids(flag_rows):
    verdicts = {}
    for row in flag_rows:
        verdicts[(row["event_id"], row["actor"])] = row["verdict"]
    return {eid for (eid, _), v in verdicts.items() if v == "invalid"}


def keep(events, flag_rows):
    dropped = excluded_ids(flag_rows)
    return [e for e in events if e["event_id"] not in dropped]


def scan_sessions(timestamps):
    """One-pass reference scan over sorted timestamps."""
    sessions = []
    previous = None
    for ts in timestamps:
        if previous is not None and ts - previous <= GAP_MS:
            sessions[-1][1] = ts
            sessions[-1][2] += 1
        else:
            sessions.append([ts, ts, 1])
        previous = ts
    return [(s[0], s[1], s[2]) for s in sessions]


def _day_events(events, user_id, day):
    picked = [
        e
        for e in events
        if e["user_id"] == user_id and day_of(e["adjusted_ts"]) == day
    ]
    picked.sort(key=lambda e: (e["adjusted_ts"], e["event_id"]))
    return picked


def user_metrics(events, flag_rows):
    """(user_id, date, metric) -> value, recomputed event by event."""
    events = keep(events, flag_rows)
    out = {}
    pairs = sorted({(e["user_id"], day_of(e["adjusted_ts"])) for e in events})
    for user_id, day in pairs:
        rows = _day_events(events, user_id, day)
        sessions = scan_sessions([e["adjusted_ts"] for e in rows])
        duration_ms = sum(end - start for start, end, _ in sessions)
        offline = len([e for e in rows if e["connectivity"]["online"] is False])
        out[(user_id, day, "event_count")] = len(rows)
        out[(user_id, day, "session_count")] = len(sessions)
        out[(user_id, day, "active_minutes")] = duration_ms / 60_000
        out[(user_id, day, "content_views")] = len(
            [e for e in rows if e["kind"] == "content_view"]
        )
        out[(user_id, day, "content_completions")] = len(
            [e for e in rows if e["kind"] == "content_complete"]
        )
        out[(user_id, day, "purchases")] = len(
            [e for e in rows if e["kind"] == "purchase"]
        )
        out[(user_id, day, "offline_event_fraction")] = offline / len(rows)
    return out


def content_metrics(events, flag_rows):
    events = keep(events, flag_rows)
    relevant = [
        e
        for e in events
        if e["kind"] in ("content_view", "content_complete")
        and content_of(e) is not None
    ]
    out = {}
    pairs = sorted({(content_of(e), day_of(e["adjusted_ts"])) for e in relevant})
    for content_id, day in pairs:
        rows = [
            e
            for e in relevant
            if content_of(e) == content_id and day_of(e["adjusted_ts"]) == day
        ]
        views = [e for e in rows if e["kind"] == "content_view"]
        out[(content_id, day, "views")] = len(views)
        out[(content_id, day, "completions")] = len(
            [e for e in rows if e["kind"] == "content_complete"]
        )
        out[(content_id, day, "unique_viewers")] = len({e["user_id"] for e in views})
    return out


def kpis_from_raw(events, flag_rows):
    """(date, kpi) -> value straight from events, bypassing metric rows."""
    events = keep(events, flag_rows)
    out = {}
    if not events:
        return out
    days = sorted({day_of(e["adjusted_ts"]) for e in events})
    first = date.fromisoformat(days[0])
    last = date.fromisoformat(days[-1])
    day = first
    while day <= last:
        label = day.isoformat()
        todays = [e for e in events if day_of(e["adjusted_ts"]) == label]
        users = sorted({e["user_id"] for e in todays})
        session_count = 0
        duration_ms = 0
        for user_id in users:
            sessions = scan_sessions(
                [e["adjusted_ts"] for e in _day_events(todays, user_id, label)]
            )
            session_count += len(sessions)
            duration_ms += sum(end - start for start, end, _ in sessions)
        offline = len([e for e in todays if e["connectivity"]["online"] is False])
        out[(label, "dau")] = len(users)
        out[(label, "total_events")] = len(todays)
        out[(label, "total_purchases")] = len(
            [e for e in todays if e["kind"] == "purchase"]
        )
        out[(label, "avg_session_minutes")] = (
            (duration_ms / 60_000) / session_count if session_count else 0.0
        )
        out[(label, "offline_fraction")] = (
            offline / len(todays) if todays else 0.0
        )
        day += timedelta(days=1)
    return out


def traits(events, flag_rows):
    """(subject_kind, subject_id, trait) -> value."""
    events = keep(events, flag_rows)
    out = {}
    for user_id in sorted({e["user_id"] for e in events}):
        mine = [e for e in events if e["user_id"] == user_id]
        stamps = [e["adjusted_ts"] for e in mine]
        out[("user", user_id, "first_seen")] = iso_utc(min(stamps))
        out[("user", user_id, "last_seen")] = iso_utc(max(stamps))
        out[("user", user_id, "days_active")] = len({day_of(t) for t in stamps})
        tally = {}
        for e in mine:
            tally[e["kind"]] = tally.get(e["kind"], 0) + 1
        best = max(tally.values())
        out[("user", user_id, "favorite_kind")] = sorted(
            k for k, n in tally.items() if n == best
        )[0]

    relevant = [
        e
        for e in events
        if e["kind"] in ("content_view", "content_complete")
        and content_of(e) is not None
    ]
    for content_id in sorted({content_of(e) for e in relevant}):
        mine = [e for e in relevant if content_of(e) == content_id]
        views = [e for e in mine if e["kind"] == "content_view"]
        out[("content", content_id, "total_views")] = len(views)
        out[("content", content_id, "unique_viewers")] = len(
            {e["user_id"] for e in views}
        )
        if views:
            out[("content", content_id, "first_viewed")] = iso_utc(
                min(e["adjusted_ts"] for e in views)
            )
    return out


def interactions(events, flag_rows):
    events = keep(events, flag_rows)
    mapping = {"content_view": "view", "content_complete": "complete",
               "purchase": "purchase"}
    rows = []
    for e in events:
        if e["kind"] not in mapping:
            continue
        ref = content_of(e)
        if ref is None:
            continue
        rows.append(
            (e["adjusted_ts"], e["event_id"], e["user_id"], ref, mapping[e["kind"]])
        )
    rows.sort()
    return [
        {
            "user_id": user,
            "content_id": content,
            "adjusted_ts": ts,
            "interaction_type": itype,
            "event_id": eid,
        }
        for ts, eid, user, content, itype in rows
    ]
