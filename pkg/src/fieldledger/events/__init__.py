"""Canonical event model: envelope, schema catalog, validation, serialization."""

from .canonical import canonical_bytes, parse
from .catalog import (
    CatalogInvalid,
    SchemaCatalog,
    SchemaDefinition,
    builtin_catalog,
    load_catalog,
)
from .normalize import (
    LocationOutOfRange,
    MalformedTimestamp,
    epoch_ms_to_instant,
    instant_to_epoch_ms,
    normalize_location,
    normalize_timestamp,
    parse_instant,
)
from .types import (
    EVENT_KINDS,
    NETWORK_TYPES,
    ConnectivityInfo,
    EventEnvelope,
    GeoPoint,
)
from .ulid import UlidFactory, is_valid, new_ulid
from .validate import ValidationError, ValidationOutcome, validate_event

__all__ = [
    "CatalogInvalid",
    "ConnectivityInfo",
    "EVENT_KINDS",
    "EventEnvelope",
    "GeoPoint",
    "LocationOutOfRange",
    "MalformedTimestamp",
    "NETWORK_TYPES",
    "SchemaCatalog",
    "SchemaDefinition",
    "UlidFactory",
    "ValidationError",
    "ValidationOutcome",
    "builtin_catalog",
    "canonical_bytes",
    "epoch_ms_to_instant",
    "instant_to_epoch_ms",
    "is_valid",
    "load_catalog",
    "new_ulid",
    "normalize_location",
    "normalize_timestamp",
    "parse",
    "parse_instant",
    "validate_event",
]
