"""Offline-first client SDK: durable queue, batching, backoff, speed estimate."""

from .client import (
    BACKOFF_BASE_MS,
    BACKOFF_CAP_MS,
    FlushReport,
    LocalValidationFailed,
    SdkClient,
    SpeedEstimator,
    backoff_delay_ms,
)
from .queue import DurableQueue, QueueFull, StorageCorrupt
from .transport import HttpTransport, Transport, TransportError

__all__ = [
    "BACKOFF_BASE_MS",
    "BACKOFF_CAP_MS",
    "DurableQueue",
    "FlushReport",
    "HttpTransport",
    "LocalValidationFailed",
    "QueueFull",
    "SdkClient",
    "SpeedEstimator",
    "StorageCorrupt",
    "Transport",
    "TransportError",
    "backoff_delay_ms",
]
