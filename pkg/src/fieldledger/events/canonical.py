"""Deterministic JSON serialization.

Every byte stored or hashed by the platform goes through here: object keys
in ascending lexicographic order, no insignificant whitespace, floats in
shortest round-trip form, UTF-8. parse(serialize(doc)) == doc, and
serialize is a fixpoint over that round trip.
"""

from __future__ import annotations

import json
from typing import Any


def canonical_bytes(doc: Any) -> bytes:
    return json.dumps(
        doc,
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
    ).encode("utf-8")


def parse(data: bytes | str) -> Any:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return json.loads(data)
