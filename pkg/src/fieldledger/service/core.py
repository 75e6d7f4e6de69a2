"""Ingestion service: dedup, skew correction, validation, quarantine, query."""

from __future__ import annotations

import base64
import hashlib
import json
import threading
from pathlib import Path
from typing import Any, Optional

from ..events import (
    EVENT_KINDS,
    MalformedTimestamp,
    SchemaCatalog,
    builtin_catalog,
    canonical_bytes,
    epoch_ms_to_instant,
    instant_to_epoch_ms,
    is_valid,
    normalize_timestamp,
    parse_instant,
    validate_event,
)
from ..store import Store, Table, VersionConflict
from .errors import BadFilter, BadFlag, BatchMalformed, NotFound, StorageUnavailable

DEFAULT_BATCH_LIMIT = 100
DEFAULT_PAGE_LIMIT = 100
MAX_PAGE_LIMIT = 1000
MAX_ID_LEN = 128
MAX_NOTE_LEN = 1024
CLOCK_JITTER_MS = 60_000
COMMIT_RETRIES = 10

VERDICTS = ("invalid", "suspicious", "cleared")

EVENTS_TABLE = "events"
QUARANTINE_TABLE = "quarantine"
FLAGS_TABLE = "curation_flags"


def _encode_cursor(doc: dict) -> str:
    return base64.urlsafe_b64encode(canonical_bytes(doc)).decode("ascii")


def _decode_cursor(token: str) -> dict:
    try:
        doc = json.loads(base64.urlsafe_b64decode(token.encode("ascii")))
    except Exception:
        raise BadFilter(f"cursor is not decodable: {token!r}") from None
    if not isinstance(doc, dict):
        raise BadFilter("cursor payload is not an object")
    return doc


def _filter_key(table_name: str, filter: dict) -> str:
    """Digest binding a cursor to the table and filter it was issued for."""
    doc = {"table": table_name, "filter": filter}
    return hashlib.sha256(canonical_bytes(doc)).hexdigest()[:8]


def _parse_bound(name: str, value: Any) -> int:
    """Accept an ISO instant or epoch milliseconds for a time bound."""
    if isinstance(value, int) and not isinstance(value, bool):
        return value
    if isinstance(value, str):
        try:
            return instant_to_epoch_ms(parse_instant(value))
        except MalformedTimestamp as exc:
            raise BadFilter(f"{name}: {exc}") from None
    raise BadFilter(f"{name} must be an instant or epoch-ms integer")


class IngestionService:
    """The platform edge over one versioned store.

    Thread-safe: concurrent ingests race on the store's optimistic commit
    and retry; the in-memory dedup set is folded forward from the commit
    log, so it also survives restarts.
    """

    def __init__(
        self,
        data_dir: str | Path,
        *,
        batch_limit: int = DEFAULT_BATCH_LIMIT,
        catalog: Optional[SchemaCatalog] = None,
    ):
        self.store = Store(data_dir)
        self.batch_limit = batch_limit
        self.catalog = catalog or builtin_catalog()
        self.events = self.store.table(EVENTS_TABLE)
        self.quarantine = self.store.table(QUARANTINE_TABLE)
        self.flags = self.store.table(FLAGS_TABLE)
        self._seen: set[str] = set()
        self._seen_versions = {EVENTS_TABLE: 0, QUARANTINE_TABLE: 0}
        self._lock = threading.Lock()
        self._refresh_seen()

    # -- dedup index -------------------------------------------------------

    def _refresh_seen(self) -> None:
        """Fold commits we have not seen yet into the dedup set."""
        with self._lock:
            for table in (self.events, self.quarantine):
                done = self._seen_versions[table.name]
                latest = table.latest()
                for version in range(done + 1, latest + 1):
                    for row in table.read_commit(version):
                        event_id = row.get("event_id")
                        if isinstance(event_id, str):
                            self._seen.add(event_id)
                self._seen_versions[table.name] = latest

    # -- ingestion ---------------------------------------------------------

    def _check_batch(self, request: Any) -> tuple[str, int, list]:
        if not isinstance(request, dict):
            raise BatchMalformed("request body must be a JSON object")
        batch_id = request.get("batch_id")
        if not isinstance(batch_id, str) or not is_valid(batch_id):
            raise BatchMalformed(f"batch_id must be a ULID, got {batch_id!r}")
        for field in ("app_id", "device_id"):
            value = request.get(field)
            if not isinstance(value, str) or not 1 <= len(value) <= MAX_ID_LEN:
                raise BatchMalformed(f"{field} must be a non-empty string")
        sent_ts = request.get("sent_ts")
        try:
            sent_ms = instant_to_epoch_ms(parse_instant(sent_ts))
        except MalformedTimestamp as exc:
            raise BatchMalformed(f"sent_ts: {exc}") from None
        events = request.get("events")
        if not isinstance(events, list) or not events:
            raise BatchMalformed("events must be a non-empty list")
        if len(events) > self.batch_limit:
            raise BatchMalformed(
                f"batch of {len(events)} exceeds limit {self.batch_limit}"
            )
        # clock-jitter bound only applies where client_ts parses at all;
        # unparseable timestamps are a per-event verdict, not a batch one
        for event in events:
            if not isinstance(event, dict):
                continue
            try:
                client_ms = instant_to_epoch_ms(parse_instant(event.get("client_ts")))
            except MalformedTimestamp:
                continue
            if client_ms > sent_ms + CLOCK_JITTER_MS:
                raise BatchMalformed(
                    "client_ts ahead of sent_ts by more than 60 s"
                )
        return batch_id, sent_ms, events

    def ingest_batch(self, request: Any, server_now_ms: int) -> dict:
        """Validate, dedup, and commit one batch. Returns the BatchResponse doc.

        At-least-once delivery meets exactly-once storage here: replays of
        any prefix of history answer `duplicate` and change nothing.
        """
        batch_id, sent_ms, events = self._check_batch(request)
        skew_ms = server_now_ms - sent_ms
        received_at = epoch_ms_to_instant(server_now_ms)
        op_meta = {
            "batch_id": batch_id,
            "app_id": request["app_id"],
            "device_id": request["device_id"],
        }

        for attempt in range(COMMIT_RETRIES):
            # decide against the exact version the commit will extend; any
            # later writer makes the commit conflict and we re-decide
            expected = self.events.latest()
            self._refresh_seen()
            with self._lock:
                seen = set(self._seen)
            results = []
            accepts: list[dict] = []
            rejects: list[dict] = []
            batch_ids_seen: set[str] = set()
            for event in events:
                event_id = event.get("event_id") if isinstance(event, dict) else None
                if not isinstance(event_id, str):
                    event_id = None
                if event_id is not None and (
                    event_id in seen or event_id in batch_ids_seen
                ):
                    results.append(
                        {"event_id": event_id, "status": "duplicate", "errors": []}
                    )
                    continue
                outcome = validate_event(event, self.catalog)
                if outcome.accepted:
                    row = dict(event)
                    row["adjusted_ts"] = normalize_timestamp(
                        event["client_ts"], skew_ms
                    )
                    row["app_id"] = request["app_id"]
                    row["device_id"] = request["device_id"]
                    accepts.append(row)
                    results.append(
                        {"event_id": event_id, "status": "accepted", "errors": []}
                    )
                else:
                    rejects.append(
                        {
                            "event_id": event_id,
                            "received_at": received_at,
                            "raw": event,
                            "outcome": outcome.to_wire(),
                            "batch_id": batch_id,
                        }
                    )
                    results.append(
                        {
                            "event_id": event_id,
                            "status": "rejected",
                            "errors": [e.to_wire() for e in outcome.errors],
                        }
                    )
                if event_id is not None:
                    batch_ids_seen.add(event_id)

            if not accepts:
                break
            try:
                self.events.commit(
                    accepts,
                    expected_version=expected,
                    op_meta=op_meta,
                    committed_at=server_now_ms,
                )
            except VersionConflict:
                continue  # another writer advanced the table; redo the decision
            with self._lock:
                self._seen.update(r["event_id"] for r in accepts)
                self._seen_versions[EVENTS_TABLE] = max(
                    self._seen_versions[EVENTS_TABLE], expected + 1
                )
            break
        else:
            raise StorageUnavailable(
                f"events commit contention after {COMMIT_RETRIES} attempts"
            )

        if rejects:
            self._commit_quarantine(rejects, op_meta, server_now_ms)

        return {"batch_id": batch_id, "skew_ms": skew_ms, "results": results}

    def _commit_quarantine(self, rows, op_meta, server_now_ms) -> None:
        # rows were already decided; a conflict only means someone else
        # quarantined concurrently, so retry against the new tip as-is
        for _ in range(COMMIT_RETRIES):
            expected = self.quarantine.latest()
            try:
                self.quarantine.commit(
                    rows,
                    expected_version=expected,
                    op_meta=op_meta,
                    committed_at=server_now_ms,
                )
            except VersionConflict:
                continue
            with self._lock:
                self._seen.update(
                    r["event_id"] for r in rows if isinstance(r["event_id"], str)
                )
                self._seen_versions[QUARANTINE_TABLE] = max(
                    self._seen_versions[QUARANTINE_TABLE], expected + 1
                )
            return
        raise StorageUnavailable(
            f"quarantine commit contention after {COMMIT_RETRIES} attempts"
        )

    # -- queries -----------------------------------------------------------

    def _page_args(self, filter: dict, limit, cursor, table: Table):
        if limit is None:
            limit = DEFAULT_PAGE_LIMIT
        if (
            not isinstance(limit, int)
            or isinstance(limit, bool)
            or not 1 <= limit <= MAX_PAGE_LIMIT
        ):
            raise BadFilter(f"limit must be in 1..{MAX_PAGE_LIMIT}, got {limit!r}")
        key = _filter_key(table.name, filter)
        if cursor is not None:
            doc = _decode_cursor(cursor)
            if doc.get("f") != key:
                raise BadFilter("cursor was issued for a different query")
            version, offset = doc.get("v"), doc.get("o")
            if not isinstance(version, int) or not isinstance(offset, int):
                raise BadFilter("cursor payload is malformed")
            if version > table.latest():
                raise BadFilter(f"cursor version {version} is unknown")
            return limit, version, offset, key
        return limit, table.latest(), 0, key

    def _page(self, rows: list, limit: int, version: int, offset: int, key: str):
        page = rows[offset : offset + limit]
        next_cursor = None
        if offset + limit < len(rows):
            next_cursor = _encode_cursor(
                {"v": version, "o": offset + limit, "f": key}
            )
        return page, next_cursor

    def query_events(
        self,
        filter: Optional[dict] = None,
        *,
        limit: Optional[int] = None,
        cursor: Optional[str] = None,
    ) -> dict:
        """Filtered, (adjusted_ts, event_id)-ordered page over stored events.

        The cursor pins the store version, so pages stay disjoint and
        jointly exhaustive while ingestion continues.
        """
        filter = dict(filter or {})
        unknown = set(filter) - {"user_id", "kind", "from", "to", "online"}
        if unknown:
            raise BadFilter(f"unknown filter keys: {sorted(unknown)}")
        kind = filter.get("kind")
        if kind is not None and kind not in EVENT_KINDS:
            raise BadFilter(f"unknown kind {kind!r}")
        lo = _parse_bound("from", filter["from"]) if "from" in filter else None
        hi = _parse_bound("to", filter["to"]) if "to" in filter else None
        if lo is not None and hi is not None and lo > hi:
            raise BadFilter("inverted time range: from > to")
        online = filter.get("online")
        if online is not None and not isinstance(online, bool):
            raise BadFilter(f"online must be boolean, got {online!r}")
        user_id = filter.get("user_id")

        limit, version, offset, key = self._page_args(
            filter, limit, cursor, self.events
        )
        matches = [
            row
            for row in self.events.read_at(version)
            if (user_id is None or row["user_id"] == user_id)
            and (kind is None or row["kind"] == kind)
            and (lo is None or row["adjusted_ts"] >= lo)
            and (hi is None or row["adjusted_ts"] <= hi)
            and (online is None or row["connectivity"]["online"] is online)
        ]
        matches.sort(key=lambda r: (r["adjusted_ts"], r["event_id"]))
        page, next_cursor = self._page(matches, limit, version, offset, key)
        return {"events": page, "next_cursor": next_cursor, "version": version}

    def list_quarantine(
        self, *, limit: Optional[int] = None, cursor: Optional[str] = None
    ) -> dict:
        limit, version, offset, key = self._page_args(
            {}, limit, cursor, self.quarantine
        )
        rows = list(self.quarantine.read_at(version))
        rows.sort(key=lambda r: r["received_at"])  # stable: ties keep store order
        page, next_cursor = self._page(rows, limit, version, offset, key)
        return {"records": page, "next_cursor": next_cursor, "version": version}

    # -- curation ----------------------------------------------------------

    def _known_event_ids(self) -> set[str]:
        with self._lock:
            return set(self._seen)

    def flag_record(
        self, event_id, verdict, note, actor, server_now_ms: int
    ) -> dict:
        """Record a human verdict; the newest flag per (event_id, actor) wins."""
        if not isinstance(event_id, str) or not event_id:
            raise BadFlag("event_id must be a non-empty string")
        if verdict not in VERDICTS:
            raise BadFlag(f"verdict must be one of {VERDICTS}, got {verdict!r}")
        if not isinstance(note, str) or len(note) > MAX_NOTE_LEN:
            raise BadFlag(f"note must be a string of at most {MAX_NOTE_LEN} chars")
        if not isinstance(actor, str) or not 1 <= len(actor) <= MAX_ID_LEN:
            raise BadFlag("actor must be a non-empty string")
        self._refresh_seen()
        if event_id not in self._known_event_ids():
            raise NotFound(f"event {event_id!r} is not in events or quarantine")
        flag = {
            "event_id": event_id,
            "verdict": verdict,
            "note": note,
            "actor": actor,
            "flagged_at": epoch_ms_to_instant(server_now_ms),
        }
        for _ in range(COMMIT_RETRIES):
            try:
                self.flags.commit(
                    [flag],
                    expected_version=self.flags.latest(),
                    op_meta={"actor": actor},
                    committed_at=server_now_ms,
                )
                return flag
            except VersionConflict:
                continue
        raise StorageUnavailable(
            f"flag commit contention after {COMMIT_RETRIES} attempts"
        )

    def active_flags(
        self, event_id: Optional[str] = None, version: Optional[int] = None
    ) -> list[dict]:
        """Latest flag per (event_id, actor), `cleared` verdicts dropped."""
        if version is None:
            version = self.flags.latest()
        latest: dict[tuple[str, str], dict] = {}
        for row in self.flags.read_at(version):
            latest[(row["event_id"], row["actor"])] = row
        flags = [f for f in latest.values() if f["verdict"] != "cleared"]
        if event_id is not None:
            flags = [f for f in flags if f["event_id"] == event_id]
        flags.sort(key=lambda f: (f["event_id"], f["actor"]))
        return flags

    def excluded_event_ids(self, version: Optional[int] = None) -> set[str]:
        """Events any actor currently holds `invalid`; pipeline input drops these."""
        return {
            f["event_id"]
            for f in self.active_flags(version=version)
            if f["verdict"] == "invalid"
        }

    # -- store passthrough ---------------------------------------------------

    def table_versions(self, name: str) -> list[dict]:
        table = self.store.open_table(name)
        return [record.to_wire() for record in table.history()]

    def table_rows(self, name: str, version: Optional[int] = None) -> dict:
        table = self.store.open_table(name)
        if version is None:
            version = table.latest()
        rows = table.read_at(version)
        return {"table": name, "version": version, "rows": rows}
