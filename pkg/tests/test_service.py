import random

import pytest

from fieldledger.events import UlidFactory, epoch_ms_to_instant
from fieldledger.service import (
    BadFilter,
    BadFlag,
    BatchMalformed,
    IngestionService,
    NotFound,
    StorageUnavailable,
)
from fieldledger.store import Table, VersionConflict

BASE_MS = 1_646_092_800_000  # 2022-03-01T00:00:00Z

_ulids = UlidFactory(clock_ms=lambda: BASE_MS, rng=random.Random(99))


def env(user="u1", kind="page_view", ts_ms=BASE_MS, *, online=True, event_id=None,
        payload=None, **extra):
    doc = {
        "event_id": event_id or _ulids.new(),
        "user_id": user,
        "kind": kind,
        "client_ts": epoch_ms_to_instant(ts_ms),
        "connectivity": (
            {"online": True, "network_type": "wifi", "speed_kbps": 900.0}
            if online
            else {"online": False, "network_type": "offline"}
        ),
        "sdk_version": "0.1.0",
        "schema_version": 1,
        "payload": payload if payload is not None else {"page_id": "home"},
    }
    doc.update(extra)
    return doc


def batch(events, *, sent_ms=BASE_MS, batch_id=None, app="demo", device="dev-1"):
    return {
        "batch_id": batch_id or _ulids.new(),
        "app_id": app,
        "device_id": device,
        "sent_ts": epoch_ms_to_instant(sent_ms),
        "events": events,
    }


@pytest.fixture
def svc(tmp_path):
    return IngestionService(tmp_path / "data")


def statuses(response):
    return [r["status"] for r in response["results"]]


# -- ingest ------------------------------------------------------------------


def test_fresh_batch_accepted(svc):
    events = [env(ts_ms=BASE_MS + i) for i in range(10)]
    response = svc.ingest_batch(batch(events), BASE_MS + 1000)
    assert statuses(response) == ["accepted"] * 10
    assert [r["event_id"] for r in response["results"]] == [
        e["event_id"] for e in events
    ]
    assert svc.events.latest() == 1
    assert len(svc.events.read_at(1)) == 10


def test_replay_is_all_duplicate(svc):
    events = [env(ts_ms=BASE_MS + i) for i in range(10)]
    request = batch(events)
    svc.ingest_batch(request, BASE_MS + 1000)
    replay = svc.ingest_batch(request, BASE_MS + 9000)
    assert statuses(replay) == ["duplicate"] * 10
    assert svc.events.latest() == 1  # no new version


def test_mixed_batch_accounting(svc):
    good = [env(ts_ms=BASE_MS + i) for i in range(8)]
    bad = [
        env(payload={}),  # missing page_id
        env(kind="teleport"),  # unknown kind
    ]
    response = svc.ingest_batch(batch(good + bad), BASE_MS)
    counts = {s: statuses(response).count(s) for s in set(statuses(response))}
    assert counts == {"accepted": 8, "rejected": 2}
    rejected = [r for r in response["results"] if r["status"] == "rejected"]
    assert all(r["errors"] for r in rejected)
    assert rejected[0]["errors"][0]["path"] == "payload.page_id"
    records = svc.list_quarantine()["records"]
    assert len(records) == 2
    assert {r["event_id"] for r in records} == {e["event_id"] for e in bad}
    assert all(r["outcome"]["errors"] for r in records)
    assert all(r["batch_id"] == response["batch_id"] for r in records)


def test_requarantine_answers_duplicate(svc):
    bad = env(payload={})
    first = svc.ingest_batch(batch([bad]), BASE_MS)
    assert statuses(first) == ["rejected"]
    again = svc.ingest_batch(batch([bad]), BASE_MS + 500)
    assert statuses(again) == ["duplicate"]
    assert len(svc.list_quarantine()["records"]) == 1


def test_intra_batch_duplicate(svc):
    e = env()
    response = svc.ingest_batch(batch([e, dict(e)]), BASE_MS)
    assert statuses(response) == ["accepted", "duplicate"]
    assert len(svc.events.read_at(svc.events.latest())) == 1


def test_skew_correction(svc):
    # device clock 90 s slow: sent_ts lags server_now by 90 s
    event = env(ts_ms=BASE_MS)
    request = batch([event], sent_ms=BASE_MS + 10_000)
    svc.ingest_batch(request, BASE_MS + 100_000)
    row = svc.events.read_at(1)[0]
    assert row["adjusted_ts"] == BASE_MS + 90_000
    assert row["client_ts"] == event["client_ts"]  # raw value retained
    assert row["app_id"] == "demo" and row["device_id"] == "dev-1"


def test_dedup_survives_restart(svc, tmp_path):
    events = [env() for _ in range(5)]
    svc.ingest_batch(batch(events), BASE_MS)
    reborn = IngestionService(tmp_path / "data")
    replay = reborn.ingest_batch(batch(events), BASE_MS + 1000)
    assert statuses(replay) == ["duplicate"] * 5


def test_batch_level_rejections(svc):
    ok = env()
    cases = [
        batch([], sent_ms=BASE_MS),
        batch([ok], batch_id="not-a-ulid"),
        {**batch([ok]), "app_id": ""},
        {**batch([ok]), "sent_ts": "2022-03-01 00:00:00"},
        {**batch([ok]), "events": "nope"},
        "just a string",
    ]
    for request in cases:
        with pytest.raises(BatchMalformed):
            svc.ingest_batch(request, BASE_MS)
    assert svc.events.latest() == 0


def test_batch_limit(svc):
    events = [env(ts_ms=BASE_MS + i) for i in range(101)]
    with pytest.raises(BatchMalformed):
        svc.ingest_batch(batch(events), BASE_MS)


def test_client_ts_ahead_of_sent_ts(svc):
    # 59 s ahead passes the jitter allowance, 61 s fails the whole batch
    fine = env(ts_ms=BASE_MS + 59_000)
    response = svc.ingest_batch(batch([fine], sent_ms=BASE_MS), BASE_MS)
    assert statuses(response) == ["accepted"]
    ahead = env(ts_ms=BASE_MS + 61_000)
    with pytest.raises(BatchMalformed):
        svc.ingest_batch(batch([ahead], sent_ms=BASE_MS), BASE_MS)


def test_unparseable_client_ts_is_per_event(svc):
    # malformed timestamps cannot be jitter-checked; they quarantine instead
    broken = env()
    broken["client_ts"] = "yesterday"
    response = svc.ingest_batch(batch([broken, env()]), BASE_MS)
    assert statuses(response) == ["rejected", "accepted"]
    codes = {e["code"] for e in response["results"][0]["errors"]}
    assert "MALFORMED_TIMESTAMP" in codes


def test_storage_unavailable_after_contention(svc, monkeypatch):
    def always_conflict(self, *args, **kwargs):
        raise VersionConflict("synthetic contention")

    monkeypatch.setattr(Table, "commit", always_conflict)
    with pytest.raises(StorageUnavailable):
        svc.ingest_batch(batch([env()]), BASE_MS)


# -- query -------------------------------------------------------------------


def seed_corpus(svc):
    events = []
    for i in range(20):
        events.append(
            env(
                user=f"u{i % 4}",
                kind="page_view" if i % 3 else "purchase",
                ts_ms=BASE_MS + i * 60_000,
                online=i % 2 == 0,
                payload=(
                    {"page_id": f"p{i}"}
                    if i % 3
                    else {"amount": 1.0 + i, "currency": "USD"}
                ),
            )
        )
    svc.ingest_batch(
        batch(events, sent_ms=BASE_MS + 30 * 60_000), BASE_MS + 30 * 60_000
    )
    return events


def test_query_user_filter_matches_scan(svc):
    seed_corpus(svc)
    result = svc.query_events({"user_id": "u1"})
    rows = svc.events.read_at(svc.events.latest())
    expected = sorted(
        (r for r in rows if r["user_id"] == "u1"),
        key=lambda r: (r["adjusted_ts"], r["event_id"]),
    )
    assert result["events"] == expected
    assert result["next_cursor"] is None


def test_query_online_filter_matches_scan(svc):
    seed_corpus(svc)
    result = svc.query_events({"online": False}, limit=1000)
    rows = svc.events.read_at(svc.events.latest())
    assert len(result["events"]) == sum(
        1 for r in rows if not r["connectivity"]["online"]
    )
    assert all(not r["connectivity"]["online"] for r in result["events"])


def test_query_time_range(svc):
    seed_corpus(svc)
    lo = BASE_MS + 5 * 60_000
    hi = BASE_MS + 10 * 60_000
    result = svc.query_events(
        {"from": epoch_ms_to_instant(lo), "to": epoch_ms_to_instant(hi)}
    )
    assert [r["adjusted_ts"] for r in result["events"]] == [
        lo,
        lo + 60_000,
        lo + 2 * 60_000,
        lo + 3 * 60_000,
        lo + 4 * 60_000,
        hi,
    ]


def test_pagination_algebra(svc):
    seed_corpus(svc)
    filter = {"kind": "page_view"}
    full = svc.query_events(filter, limit=1000)["events"]
    assert len(full) > 4
    pages = []
    cursor = None
    sizes = []
    while True:
        page = svc.query_events(filter, limit=5, cursor=cursor)
        pages.extend(page["events"])
        sizes.append(len(page["events"]))
        cursor = page["next_cursor"]
        if cursor is None:
            break
    assert pages == full
    assert sizes[:-1] == [5] * (len(sizes) - 1)  # only the last page is short


def test_cursor_pins_version_across_ingest(svc):
    seed_corpus(svc)
    first = svc.query_events({}, limit=5)
    svc.ingest_batch(batch([env(ts_ms=BASE_MS - 1)]), BASE_MS + 3_600_000)
    rest = []
    cursor = first["next_cursor"]
    while cursor:
        page = svc.query_events({}, limit=5, cursor=cursor)
        rest.extend(page["events"])
        cursor = page["next_cursor"]
    ids = [r["event_id"] for r in first["events"] + rest]
    assert len(ids) == 20  # the late event is invisible at the pinned version
    assert len(set(ids)) == 20


def test_bad_filters(svc):
    seed_corpus(svc)
    with pytest.raises(BadFilter):
        svc.query_events({"kind": "teleport"})
    with pytest.raises(BadFilter):
        svc.query_events(
            {"from": epoch_ms_to_instant(BASE_MS + 1000),
             "to": epoch_ms_to_instant(BASE_MS)}
        )
    with pytest.raises(BadFilter):
        svc.query_events({}, limit=1001)
    with pytest.raises(BadFilter):
        svc.query_events({}, limit=0)
    with pytest.raises(BadFilter):
        svc.query_events({"flavor": "salty"})
    with pytest.raises(BadFilter):
        svc.query_events({}, cursor="!!!not-base64!!!")


def test_cursor_bound_to_its_filter(svc):
    seed_corpus(svc)
    page = svc.query_events({"user_id": "u1"}, limit=2)
    assert page["next_cursor"]
    with pytest.raises(BadFilter):
        svc.query_events({"user_id": "u2"}, limit=2, cursor=page["next_cursor"])
    with pytest.raises(BadFilter):
        svc.list_quarantine(cursor=page["next_cursor"])


def test_quarantine_pagination(svc):
    bad = [env(payload={}) for _ in range(7)]
    svc.ingest_batch(batch(bad[:4]), BASE_MS)
    svc.ingest_batch(batch(bad[4:]), BASE_MS + 1000)
    first = svc.list_quarantine(limit=5)
    second = svc.list_quarantine(limit=5, cursor=first["next_cursor"])
    ids = [r["event_id"] for r in first["records"] + second["records"]]
    assert len(ids) == 7 and len(set(ids)) == 7
    assert second["next_cursor"] is None
    received = [r["received_at"] for r in first["records"] + second["records"]]
    assert received == sorted(received)


# -- curation ------------------------------------------------------------------


def test_flag_lifecycle(svc):
    events = seed_corpus(svc)
    target = events[0]["event_id"]
    flag = svc.flag_record(target, "suspicious", "odd location", "ana", BASE_MS)
    assert flag["verdict"] == "suspicious"
    active = svc.active_flags(target)
    assert [f["verdict"] for f in active] == ["suspicious"]

    # same actor re-flags: replaces, does not accumulate
    svc.flag_record(target, "invalid", "confirmed bogus", "ana", BASE_MS + 1000)
    active = svc.active_flags(target)
    assert [f["verdict"] for f in active] == ["invalid"]
    assert svc.excluded_event_ids() == {target}

    # another actor's verdict coexists
    svc.flag_record(target, "suspicious", "second look", "ben", BASE_MS + 2000)
    assert len(svc.active_flags(target)) == 2

    # cleared cancels only that actor's verdict
    svc.flag_record(target, "cleared", "false alarm", "ana", BASE_MS + 3000)
    active = svc.active_flags(target)
    assert [(f["actor"], f["verdict"]) for f in active] == [("ben", "suspicious")]
    assert svc.excluded_event_ids() == set()


def test_flag_unknown_event(svc):
    seed_corpus(svc)
    with pytest.raises(NotFound):
        svc.flag_record("01ARZ3NDEKTSV4RRFFQ69G5FAV", "invalid", "", "ana", BASE_MS)


def test_flag_on_quarantined_event(svc):
    bad = env(payload={})
    svc.ingest_batch(batch([bad]), BASE_MS)
    flag = svc.flag_record(bad["event_id"], "invalid", "", "ana", BASE_MS)
    assert flag["event_id"] == bad["event_id"]


def test_flag_field_constraints(svc):
    events = seed_corpus(svc)
    target = events[0]["event_id"]
    with pytest.raises(BadFlag):
        svc.flag_record(target, "wrong", "", "ana", BASE_MS)
    with pytest.raises(BadFlag):
        svc.flag_record(target, "invalid", "x" * 1025, "ana", BASE_MS)
    with pytest.raises(BadFlag):
        svc.flag_record(target, "invalid", "", "", BASE_MS)


# -- store passthrough ---------------------------------------------------------


def test_table_passthrough(svc):
    seed_corpus(svc)
    versions = svc.table_versions("events")
    assert [v["version"] for v in versions] == [1]
    assert versions[0]["op_meta"]["app_id"] == "demo"
    rows = svc.table_rows("events", 1)
    assert rows["version"] == 1 and len(rows["rows"]) == 20
