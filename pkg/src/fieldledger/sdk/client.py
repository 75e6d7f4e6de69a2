"""The in-app SDK: durable local logging, connection-aware batching, upload.

The host app (or the simulator) supplies the clock and the connectivity
snapshot; the SDK never senses the network itself, which keeps it portable
and deterministic under test.
"""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from .. import __version__
from ..events import builtin_catalog, validate_event
from ..events.canonical import canonical_bytes, parse
from ..events.normalize import epoch_ms_to_instant, normalize_location
from ..events.types import ConnectivityInfo
from ..events.ulid import UlidFactory
from .queue import DEFAULT_CAPACITY, DurableQueue, QueueFull
from .transport import Transport, TransportError

DEFAULT_BATCH_EVENTS = 100
DEFAULT_BATCH_BYTES = 512 * 1024

BACKOFF_BASE_MS = 1_000
BACKOFF_CAP_MS = 300_000
BACKOFF_JITTER = 0.2


class LocalValidationFailed(Exception):
    """Payload violates the kind's schema; the event was not enqueued."""

    def __init__(self, errors):
        super().__init__("; ".join(f"{e.path}: {e.message}" for e in errors))
        self.errors = errors


def backoff_delay_ms(consecutive_failures: int, rng: random.Random) -> float:
    """Exponential backoff: 1 s base, doubling, 5 min cap, ±20% jitter."""
    raw = min(BACKOFF_BASE_MS * 2 ** (consecutive_failures - 1), BACKOFF_CAP_MS)
    return raw * (1 + rng.uniform(-BACKOFF_JITTER, BACKOFF_JITTER))


@dataclass
class SpeedEstimator:
    """EWMA over observed upload throughput, in kbit/s."""

    alpha: float = 0.3
    ewma_kbps: Optional[float] = None

    def observe_transfer(self, n_bytes: int, duration_ms: float) -> None:
        if duration_ms <= 0:
            return  # zero-duration samples carry no rate information
        sample = n_bytes * 8 / duration_ms
        if self.ewma_kbps is None:
            self.ewma_kbps = sample
        else:
            self.ewma_kbps = self.alpha * sample + (1 - self.alpha) * self.ewma_kbps


@dataclass
class FlushReport:
    attempted: int = 0
    accepted: int = 0
    duplicates: int = 0
    rejected: int = 0
    retained: int = 0
    next_retry_after_ms: Optional[float] = None
    skipped: Optional[str] = None  # offline | backoff | concurrent_flush
    batches_sent: int = 0
    request_latencies_ms: list = field(default_factory=list)


class SdkClient:
    """One SDK instance: a durable queue plus upload machinery."""

    def __init__(
        self,
        storage_path: str | Path,
        *,
        app_id: str = "app",
        device_id: str = "device",
        clock_ms: Optional[Callable[[], int]] = None,
        utc_offset_minutes: int = 0,
        connectivity: Optional[Callable[[], ConnectivityInfo]] = None,
        capacity: int = DEFAULT_CAPACITY,
        batch_events: int = DEFAULT_BATCH_EVENTS,
        batch_bytes: int = DEFAULT_BATCH_BYTES,
        rng: Optional[random.Random] = None,
        catalog=None,
    ):
        import time as _time

        self.app_id = app_id
        self.device_id = device_id
        self.clock_ms = clock_ms or (lambda: int(_time.time() * 1000))
        self.utc_offset_minutes = utc_offset_minutes
        self.connectivity_provider = connectivity or (
            lambda: ConnectivityInfo(online=True, network_type="unknown")
        )
        self.batch_events = batch_events
        self.batch_bytes = batch_bytes
        self.catalog = catalog or builtin_catalog()
        self.rng = rng or random.Random()
        self.queue = DurableQueue(storage_path, capacity=capacity)
        self.ulids = UlidFactory(clock_ms=self.clock_ms, rng=self.rng)
        self.speed = SpeedEstimator()
        self._flush_lock = threading.Lock()
        self._consecutive_failures = 0
        self._not_before_ms: Optional[float] = None

    # -- logging ---------------------------------------------------------

    def log_event(
        self,
        kind: str,
        payload: dict,
        user_id: str,
        now_ms: Optional[int] = None,
        connectivity: Optional[ConnectivityInfo] = None,
        location: Optional[tuple[float, float]] = None,
    ) -> dict:
        """Mint, validate, and durably enqueue one event. Returns the wire doc."""
        now_ms = self.clock_ms() if now_ms is None else now_ms
        conn = connectivity or self.connectivity_provider()
        if conn.online and conn.speed_kbps is None and self.speed.ewma_kbps is not None:
            conn = ConnectivityInfo(
                online=True,
                network_type=conn.network_type,
                speed_kbps=round(self.speed.ewma_kbps, 1),
            )
        doc = {
            "event_id": self.ulids.new(),
            "user_id": user_id,
            "kind": kind,
            "client_ts": epoch_ms_to_instant(now_ms, self.utc_offset_minutes),
            "connectivity": conn.to_wire(),
            "sdk_version": __version__,
            "schema_version": 1,
            "payload": dict(payload),
        }
        if location is not None:
            lat, lon = normalize_location(*location)
            doc["location"] = {"lat": lat, "lon": lon}
        outcome = validate_event(doc, self.catalog)
        if not outcome.accepted:
            raise LocalValidationFailed(outcome.errors)
        self.queue.append(canonical_bytes(doc))  # raises QueueFull at capacity
        return doc

    # -- uploading -------------------------------------------------------

    def _next_batch(self) -> list[bytes]:
        records = self.queue.peek(self.batch_events)
        batch: list[bytes] = []
        size = 0
        for record in records:
            if batch and size + len(record) > self.batch_bytes:
                break
            batch.append(record)
            size += len(record)
        return batch

    def flush(self, transport: Transport, now_ms: Optional[int] = None) -> FlushReport:
        """Drain the queue in FIFO batches while the device is online.

        At-least-once: a batch whose response is lost stays queued and is
        re-sent later; the server deduplicates by event_id.
        """
        if not self._flush_lock.acquire(blocking=False):
            return FlushReport(retained=len(self.queue), skipped="concurrent_flush")
        try:
            now_ms = self.clock_ms() if now_ms is None else now_ms
            report = FlushReport()
            if not self.connectivity_provider().online:
                report.retained = len(self.queue)
                report.skipped = "offline"
                return report
            if self._not_before_ms is not None and now_ms < self._not_before_ms:
                report.retained = len(self.queue)
                report.skipped = "backoff"
                report.next_retry_after_ms = self._not_before_ms - now_ms
                return report

            while True:
                batch = self._next_batch()
                if not batch:
                    break
                request = {
                    "batch_id": self.ulids.new(),
                    "app_id": self.app_id,
                    "device_id": self.device_id,
                    "sent_ts": epoch_ms_to_instant(now_ms, self.utc_offset_minutes),
                    "events": [parse(record) for record in batch],
                }
                report.attempted += len(batch)
                try:
                    response, latency_ms = transport.send_batch(request)
                except TransportError:
                    self._consecutive_failures += 1
                    delay = backoff_delay_ms(self._consecutive_failures, self.rng)
                    self._not_before_ms = now_ms + delay
                    report.next_retry_after_ms = delay
                    break
                self._consecutive_failures = 0
                self._not_before_ms = None
                report.batches_sent += 1
                report.request_latencies_ms.append(latency_ms)
                self.speed.observe_transfer(
                    sum(len(r) for r in batch), latency_ms
                )
                for result in response["results"]:
                    status = result["status"]
                    if status == "accepted":
                        report.accepted += 1
                    elif status == "duplicate":
                        report.duplicates += 1
                    else:
                        report.rejected += 1
                self.queue.remove_head(len(batch))

            report.retained = len(self.queue)
            return report
        finally:
            self._flush_lock.release()
