"""Per-record schema validation.

Validation runs over the wire dict (what the server actually receives), so
malformed input of any shape becomes a rejection verdict rather than a
fault. All violations are reported, not just the first; the quarantine
view depends on that.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import ulid
from .catalog import SchemaCatalog
from .normalize import MalformedTimestamp, parse_instant
from .types import MAX_ID_LEN, NETWORK_TYPES

# error codes
UNKNOWN_KIND = "UNKNOWN_KIND"
MISSING_FIELD = "MISSING_FIELD"
TYPE_MISMATCH = "TYPE_MISMATCH"
UNDECLARED_FIELD = "UNDECLARED_FIELD"
MALFORMED_TIMESTAMP = "MALFORMED_TIMESTAMP"
LOCATION_OUT_OF_RANGE = "LOCATION_OUT_OF_RANGE"
ID_MALFORMED = "ID_MALFORMED"
SCHEMA_VERSION_UNKNOWN = "SCHEMA_VERSION_UNKNOWN"

_SEMVER_RE = re.compile(r"^\d+\.\d+\.\d+([-+][0-9A-Za-z.-]+)?$")

_ENVELOPE_KEYS = {
    "event_id",
    "user_id",
    "kind",
    "client_ts",
    "location",
    "connectivity",
    "sdk_version",
    "schema_version",
    "payload",
}


@dataclass(frozen=True)
class ValidationError:
    code: str
    path: str
    message: str

    def to_wire(self) -> dict:
        return {"code": self.code, "path": self.path, "message": self.message}


@dataclass(frozen=True)
class ValidationOutcome:
    errors: tuple[ValidationError, ...] = field(default_factory=tuple)

    @property
    def accepted(self) -> bool:
        return not self.errors

    @property
    def status(self) -> str:
        return "accepted" if self.accepted else "rejected"

    def to_wire(self) -> dict:
        return {
            "status": self.status,
            "errors": [e.to_wire() for e in self.errors],
        }


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_integer(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _check_payload_value(errors, path: str, ftype: str, value) -> None:
    if ftype == "string":
        if not isinstance(value, str):
            errors.append(ValidationError(TYPE_MISMATCH, path, f"expected string, got {type(value).__name__}"))
    elif ftype == "integer":
        if not _is_integer(value):
            errors.append(ValidationError(TYPE_MISMATCH, path, f"expected integer, got {value!r}"))
    elif ftype == "number":
        if not _is_number(value):
            errors.append(ValidationError(TYPE_MISMATCH, path, f"expected number, got {value!r}"))
    elif ftype == "boolean":
        if not isinstance(value, bool):
            errors.append(ValidationError(TYPE_MISMATCH, path, f"expected boolean, got {value!r}"))
    elif ftype == "instant":
        if not isinstance(value, str):
            errors.append(ValidationError(TYPE_MISMATCH, path, "expected ISO-8601 string"))
        else:
            try:
                parse_instant(value)
            except MalformedTimestamp as exc:
                errors.append(ValidationError(MALFORMED_TIMESTAMP, path, str(exc)))
    elif ftype == "content_ref":
        if not isinstance(value, str) or not value or len(value) > MAX_ID_LEN:
            errors.append(ValidationError(TYPE_MISMATCH, path, "content reference must be a non-empty string of at most 128 chars"))


def _check_location(errors, loc) -> None:
    if not isinstance(loc, dict):
        errors.append(ValidationError(TYPE_MISMATCH, "location", "expected object with lat/lon"))
        return
    for extra in sorted(set(loc) - {"lat", "lon"}):
        errors.append(ValidationError(UNDECLARED_FIELD, f"location.{extra}", "not a location field"))
    for key, bound in (("lat", 90.0), ("lon", 180.0)):
        if key not in loc:
            errors.append(ValidationError(MISSING_FIELD, f"location.{key}", "required"))
        elif not _is_number(loc[key]):
            errors.append(ValidationError(TYPE_MISMATCH, f"location.{key}", f"expected number, got {loc[key]!r}"))
        elif abs(loc[key]) > bound:
            errors.append(ValidationError(LOCATION_OUT_OF_RANGE, f"location.{key}", f"{loc[key]} outside [-{bound}, {bound}]"))


def _check_connectivity(errors, conn) -> None:
    if not isinstance(conn, dict):
        errors.append(ValidationError(TYPE_MISMATCH, "connectivity", "expected object"))
        return
    for extra in sorted(set(conn) - {"online", "speed_kbps", "network_type"}):
        errors.append(ValidationError(UNDECLARED_FIELD, f"connectivity.{extra}", "not a connectivity field"))
    online = conn.get("online")
    if not isinstance(online, bool):
        errors.append(ValidationError(TYPE_MISMATCH, "connectivity.online", f"expected boolean, got {online!r}"))
        online = None
    network_type = conn.get("network_type")
    if network_type not in NETWORK_TYPES:
        errors.append(ValidationError(TYPE_MISMATCH, "connectivity.network_type", f"expected one of {NETWORK_TYPES}, got {network_type!r}"))
    speed = conn.get("speed_kbps")
    if speed is not None and (not _is_number(speed) or speed < 0):
        errors.append(ValidationError(TYPE_MISMATCH, "connectivity.speed_kbps", f"expected non-negative number, got {speed!r}"))
    if online is False:
        if network_type != "offline":
            errors.append(ValidationError(TYPE_MISMATCH, "connectivity.network_type", "offline events must report network_type=offline"))
        if speed is not None:
            errors.append(ValidationError(TYPE_MISMATCH, "connectivity.speed_kbps", "offline events carry no speed estimate"))


def validate_event(doc, catalog: SchemaCatalog) -> ValidationOutcome:
    """Validate one wire envelope against the catalog.

    Pure and deterministic; violations are data, not exceptions.
    """
    errors: list[ValidationError] = []
    if not isinstance(doc, dict):
        return ValidationOutcome((ValidationError(TYPE_MISMATCH, "", "envelope must be a JSON object"),))

    for extra in sorted(set(doc) - _ENVELOPE_KEYS):
        errors.append(ValidationError(UNDECLARED_FIELD, extra, "not an envelope field"))

    event_id = doc.get("event_id")
    if not ulid.is_valid(event_id):
        errors.append(ValidationError(ID_MALFORMED, "event_id", f"expected 26-char ULID, got {event_id!r}"))

    user_id = doc.get("user_id")
    if not isinstance(user_id, str) or not user_id or len(user_id) > MAX_ID_LEN:
        errors.append(ValidationError(ID_MALFORMED, "user_id", "expected non-empty string of at most 128 chars"))

    kind = doc.get("kind")
    kind_known = isinstance(kind, str) and catalog.has_kind(kind)
    if not kind_known:
        errors.append(ValidationError(UNKNOWN_KIND, "kind", f"no schema for kind {kind!r}"))

    client_ts = doc.get("client_ts")
    if not isinstance(client_ts, str):
        errors.append(ValidationError(MALFORMED_TIMESTAMP, "client_ts", f"expected ISO-8601 string, got {client_ts!r}"))
    else:
        try:
            parse_instant(client_ts)
        except MalformedTimestamp as exc:
            errors.append(ValidationError(MALFORMED_TIMESTAMP, "client_ts", str(exc)))

    if "location" in doc:
        _check_location(errors, doc["location"])

    if "connectivity" in doc:
        _check_connectivity(errors, doc["connectivity"])
    else:
        errors.append(ValidationError(MISSING_FIELD, "connectivity", "required"))

    sdk_version = doc.get("sdk_version")
    if not isinstance(sdk_version, str) or not _SEMVER_RE.match(sdk_version):
        errors.append(ValidationError(TYPE_MISMATCH, "sdk_version", f"expected semantic version, got {sdk_version!r}"))

    schema_version = doc.get("schema_version")
    definition = None
    if not _is_integer(schema_version) or schema_version < 1:
        errors.append(ValidationError(TYPE_MISMATCH, "schema_version", f"expected positive integer, got {schema_version!r}"))
    elif kind_known:
        definition = catalog.lookup(kind, schema_version)
        if definition is None:
            errors.append(ValidationError(SCHEMA_VERSION_UNKNOWN, "schema_version", f"no schema for ({kind!r}, {schema_version})"))

    payload = doc.get("payload")
    if not isinstance(payload, dict):
        errors.append(ValidationError(MISSING_FIELD, "payload", "required object"))
    elif definition is not None:
        declared = definition.field_types
        for name, ftype in definition.required_fields:
            if name not in payload:
                errors.append(ValidationError(MISSING_FIELD, f"payload.{name}", "required by schema"))
        for name in sorted(payload):
            if name not in declared:
                errors.append(ValidationError(UNDECLARED_FIELD, f"payload.{name}", f"not declared for kind {kind!r}"))
            else:
                _check_payload_value(errors, f"payload.{name}", declared[name], payload[name])

    return ValidationOutcome(tuple(errors))
