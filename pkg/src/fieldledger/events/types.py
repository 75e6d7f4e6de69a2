"""Envelope and companion value types.

The wire form (see to_wire/from_wire) is the canonical JSON shape; absent
optional values are omitted keys, never nulls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from .canonical import canonical_bytes
from .normalize import normalize_location

EVENT_KINDS = (
    "page_view",
    "content_view",
    "content_complete",
    "purchase",
    "search",
    "session_start",
    "session_end",
    "custom",
)

NETWORK_TYPES = ("wifi", "cellular", "offline", "unknown")

MAX_ID_LEN = 128


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    @classmethod
    def of(cls, lat: float, lon: float) -> "GeoPoint":
        """Range-checked, rounded constructor. Raises LocationOutOfRange."""
        return cls(*normalize_location(lat, lon))

    def to_wire(self) -> dict:
        return {"lat": self.lat, "lon": self.lon}


@dataclass(frozen=True)
class ConnectivityInfo:
    online: bool
    network_type: str = "unknown"
    speed_kbps: Optional[float] = None

    @classmethod
    def offline(cls) -> "ConnectivityInfo":
        return cls(online=False, network_type="offline", speed_kbps=None)

    def to_wire(self) -> dict:
        doc: dict = {"online": self.online, "network_type": self.network_type}
        if self.speed_kbps is not None:
            doc["speed_kbps"] = self.speed_kbps
        return doc


@dataclass(frozen=True)
class EventEnvelope:
    event_id: str
    user_id: str
    kind: str
    client_ts: str
    connectivity: ConnectivityInfo
    sdk_version: str
    schema_version: int
    payload: dict = field(default_factory=dict)
    location: Optional[GeoPoint] = None

    def to_wire(self) -> dict:
        doc: dict[str, Any] = {
            "event_id": self.event_id,
            "user_id": self.user_id,
            "kind": self.kind,
            "client_ts": self.client_ts,
            "connectivity": self.connectivity.to_wire(),
            "sdk_version": self.sdk_version,
            "schema_version": self.schema_version,
            "payload": dict(self.payload),
        }
        if self.location is not None:
            doc["location"] = self.location.to_wire()
        return doc

    def to_bytes(self) -> bytes:
        return canonical_bytes(self.to_wire())

    @classmethod
    def from_wire(cls, doc: dict) -> "EventEnvelope":
        conn = doc["connectivity"]
        loc = doc.get("location")
        return cls(
            event_id=doc["event_id"],
            user_id=doc["user_id"],
            kind=doc["kind"],
            client_ts=doc["client_ts"],
            connectivity=ConnectivityInfo(
                online=conn["online"],
                network_type=conn["network_type"],
                speed_kbps=conn.get("speed_kbps"),
            ),
            sdk_version=doc["sdk_version"],
            schema_version=doc["schema_version"],
            payload=dict(doc["payload"]),
            location=GeoPoint(loc["lat"], loc["lon"]) if loc else None,
        )
