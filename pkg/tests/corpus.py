"""Seeded envelope/corpus generators shared across the test suite."""

from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone

from fieldledger.events.normalize import round5
from fieldledger.events.ulid import UlidFactory

SDK_VERSION = "1.0.0"

_OFFSETS = ("Z", "+02:00", "-05:00", "+05:30", "+00:00")


def iso_at(ms: int, offset: str = "Z") -> str:
    """Render epoch-ms as an ISO-8601 string in the given offset."""
    if offset == "Z":
        tz = timezone.utc
        suffix = "Z"
    else:
        sign = 1 if offset[0] == "+" else -1
        hh, mm = int(offset[1:3]), int(offset[4:6])
        tz = timezone(sign * timedelta(hours=hh, minutes=mm))
        suffix = offset
    dt = datetime.fromtimestamp(ms / 1000, tz)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{dt.microsecond // 1000:03d}" + suffix


def payload_for(kind: str, rng: random.Random, content_id: str | None = None) -> dict:
    content_id = content_id or f"c{rng.randrange(40)}"
    if kind == "page_view":
        p = {"page_id": rng.choice(["home", "search", "profile", "módulo"])}
        if rng.random() < 0.4:
            p["duration_ms"] = rng.randrange(60000)
        return p
    if kind == "content_view":
        p = {"content_id": content_id}
        if rng.random() < 0.3:
            p["category"] = rng.choice(["video", "module", "quiz"])
        return p
    if kind == "content_complete":
        return {"content_id": content_id}
    if kind == "purchase":
        p = {"amount": round(rng.uniform(0.5, 99.0), 2), "currency": "USD"}
        if rng.random() < 0.5:
            p["content_id"] = content_id
        return p
    if kind == "search":
        return {"query": rng.choice(["fever", "dosage", "npi", "maternité"])}
    if kind in ("session_start", "session_end"):
        return {}
    return {"name": "checkpoint", "value_num": rng.random()}


def connectivity_for(rng: random.Random, online: bool | None = None) -> dict:
    if online is None:
        online = rng.random() > 0.3
    if not online:
        return {"online": False, "network_type": "offline"}
    conn = {"online": True, "network_type": rng.choice(["wifi", "cellular", "unknown"])}
    if rng.random() < 0.7:
        conn["speed_kbps"] = round(rng.uniform(10, 2000), 1)
    return conn


def make_envelope(
    rng: random.Random,
    ulids: UlidFactory,
    *,
    user_id: str,
    kind: str,
    ts_ms: int,
    online: bool | None = None,
    content_id: str | None = None,
) -> dict:
    doc = {
        "event_id": ulids.new(),
        "user_id": user_id,
        "kind": kind,
        "client_ts": iso_at(ts_ms, rng.choice(_OFFSETS)),
        "connectivity": connectivity_for(rng, online),
        "sdk_version": SDK_VERSION,
        "schema_version": 1,
        "payload": payload_for(kind, rng, content_id),
    }
    if rng.random() < 0.5:
        doc["location"] = {
            "lat": round5(rng.uniform(-90, 90)),
            "lon": round5(rng.uniform(-180, 180)),
        }
    return doc


KIND_WEIGHTS = {
    "page_view": 6,
    "content_view": 5,
    "content_complete": 2,
    "purchase": 1,
    "search": 2,
    "session_start": 1,
    "session_end": 1,
    "custom": 1,
}

DAY_MS = 86_400_000


def ingest_corpus(service, events: list[dict], batch_size: int = 100) -> list[dict]:
    """Push time-ordered envelopes through a service with zero clock skew.

    sent_ts and server_now coincide at each chunk's last event, so
    adjusted_ts lands exactly on the envelope's UTC epoch-ms.
    """
    from fieldledger.events.normalize import instant_to_epoch_ms, parse_instant

    batcher = UlidFactory(rng=random.Random(0xBA7C4))
    responses = []
    for i in range(0, len(events), batch_size):
        chunk = events[i : i + batch_size]
        sent_ms = max(
            instant_to_epoch_ms(parse_instant(e["client_ts"])) for e in chunk
        )
        request = {
            "batch_id": batcher.new(),
            "app_id": "demo",
            "device_id": "dev-1",
            "sent_ts": iso_at(sent_ms),
            "events": chunk,
        }
        responses.append(service.ingest_batch(request, sent_ms))
    return responses


def generate_corpus(
    seed: int,
    n_events: int,
    n_users: int = 50,
    n_contents: int = 40,
    start_ms: int = 1646092800000,  # 2022-03-01T00:00:00Z
    n_days: int = 30,
) -> list[dict]:
    """Deterministic event corpus spread over a date range, ULID-sorted."""
    rng = random.Random(seed)
    clock = {"ms": start_ms}
    ulids = UlidFactory(clock_ms=lambda: clock["ms"], rng=random.Random(seed + 1))
    kinds = list(KIND_WEIGHTS)
    weights = list(KIND_WEIGHTS.values())
    times = sorted(rng.randrange(n_days * DAY_MS) for _ in range(n_events))
    out = []
    for t in times:
        clock["ms"] = start_ms + t
        out.append(
            make_envelope(
                rng,
                ulids,
                user_id=f"u{rng.randrange(n_users)}",
                kind=rng.choices(kinds, weights)[0],
                ts_ms=start_ms + t,
                content_id=f"c{rng.randrange(n_contents)}",
            )
        )
    return out
