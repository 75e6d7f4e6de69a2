"""Batch-upload channel abstraction and its HTTP implementation."""

from __future__ import annotations

import time
from typing import Protocol

import requests

from ..events.canonical import canonical_bytes


class TransportError(Exception):
    """The batch did not get a usable response; safe to retry."""


class Transport(Protocol):
    def send_batch(self, batch: dict) -> tuple[dict, float]:
        """Deliver one batch request. Returns (response doc, latency ms)."""
        ...


class HttpTransport:
    """POSTs batches to {base_url}/v1/events:batch with an idempotency key."""

    def __init__(self, base_url: str, timeout_s: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s
        self._session = requests.Session()

    def send_batch(self, batch: dict) -> tuple[dict, float]:
        body = canonical_bytes(batch)
        started = time.monotonic()
        try:
            resp = self._session.post(
                f"{self.base_url}/v1/events:batch",
                data=body,
                headers={
                    "Content-Type": "application/json",
                    "Idempotency-Key": batch["batch_id"],
                },
                timeout=self.timeout_s,
            )
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from None
        latency_ms = (time.monotonic() - started) * 1000
        if resp.status_code != 200:
            # 503 means retry by contract; anything else is retried too:
            # dropping a batch on a server bug would lose data for good
            raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        return resp.json(), latency_ms

    def close(self) -> None:
        self._session.close()
