"""Sessionization: gap-based grouping of one user's events."""

from __future__ import annotations

DEFAULT_GAP_MINUTES = 30


def sessionize(events: list[dict], gap_minutes: int = DEFAULT_GAP_MINUTES) -> list[dict]:
    """Group adjacent events into sessions.

    `events` must already be sorted by adjusted_ts. A new session starts
    when the gap to the previous event strictly exceeds gap_minutes; a
    single-event session has duration 0.
    """
    gap_ms = gap_minutes * 60_000
    sessions: list[dict] = []
    for event in events:
        ts = event["adjusted_ts"]
        if sessions and ts - sessions[-1]["end"] <= gap_ms:
            current = sessions[-1]
            current["end"] = ts
            current["event_count"] += 1
        else:
            sessions.append({"start": ts, "end": ts, "event_count": 1})
    return sessions


def total_duration_ms(sessions: list[dict]) -> int:
    return sum(s["end"] - s["start"] for s in sessions)
