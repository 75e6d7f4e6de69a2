"""Timestamp and location normalization shared by SDK and server."""

from __future__ import annotations

import math
import re
from datetime import datetime, timedelta, timezone
from decimal import ROUND_HALF_UP, Decimal

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)

# ISO-8601 must end in an explicit offset designator: Z or +hh:mm / -hh:mm.
_OFFSET_RE = re.compile(r"(Z|[+-]\d{2}:\d{2})$")
_FRACTION_RE = re.compile(r"(\.\d{1,6})(?=Z|[+-]\d{2}:\d{2}$)")


class MalformedTimestamp(ValueError):
    """Timestamp string does not parse or lacks an offset designator."""


def parse_instant(ts: str) -> datetime:
    """Parse an ISO-8601 string that carries an explicit UTC offset."""
    if not isinstance(ts, str) or not _OFFSET_RE.search(ts):
        raise MalformedTimestamp(f"missing offset designator: {ts!r}")
    text = ts[:-1] + "+00:00" if ts.endswith("Z") else ts
    # fromisoformat on 3.10 only takes 3- or 6-digit fractions; pad to 6
    match = _FRACTION_RE.search(text)
    if match:
        frac = match.group(1)
        text = text.replace(frac, frac.ljust(7, "0"), 1)
    try:
        dt = datetime.fromisoformat(text)
    except ValueError as exc:
        raise MalformedTimestamp(str(exc)) from None
    if dt.tzinfo is None:
        raise MalformedTimestamp(f"missing offset designator: {ts!r}")
    return dt


def instant_to_epoch_ms(dt: datetime) -> int:
    td = dt - _EPOCH
    # exact integer math; sub-millisecond precision truncates
    return td.days * 86_400_000 + td.seconds * 1000 + td.microseconds // 1000


def epoch_ms_to_instant(ms: int, offset_minutes: int = 0) -> str:
    """Render epoch-ms as ISO-8601 with an explicit offset designator."""
    dt = _EPOCH + timedelta(milliseconds=ms, minutes=offset_minutes)
    base = dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{dt.microsecond // 1000:03d}"
    if offset_minutes == 0:
        return base + "Z"
    sign = "+" if offset_minutes > 0 else "-"
    hh, mm = divmod(abs(offset_minutes), 60)
    return f"{base}{sign}{hh:02d}:{mm:02d}"


def normalize_timestamp(client_ts: str, skew_ms: int = 0) -> int:
    """Convert a device timestamp to a canonical UTC epoch-ms instant.

    skew_ms is the batch-level clock correction added on top of the UTC
    conversion. Raises MalformedTimestamp when the string does not parse or
    carries no offset.
    """
    return instant_to_epoch_ms(parse_instant(client_ts)) + skew_ms


class LocationOutOfRange(ValueError):
    """Latitude or longitude outside the geographic domain."""


_FIVE_PLACES = Decimal("0.00001")


def round5(value: float) -> float:
    """Round half-away-from-zero to exactly 5 decimal places."""
    return float(Decimal(repr(value)).quantize(_FIVE_PLACES, rounding=ROUND_HALF_UP))


def normalize_location(lat: float, lon: float) -> tuple[float, float]:
    """Range-check and round a coordinate pair to 5 decimals (~1 m)."""
    for name, value, bound in (("lat", lat, 90.0), ("lon", lon, 180.0)):
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise LocationOutOfRange(f"{name} is not a number: {value!r}")
        if not math.isfinite(value):
            raise LocationOutOfRange(f"{name} is not finite")
        if abs(value) > bound:
            raise LocationOutOfRange(f"{name} {value} outside [-{bound}, {bound}]")
    return round5(lat), round5(lon)
