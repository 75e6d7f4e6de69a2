"""Built-in schema catalog: loading, meta-validation, lookup.

The catalog is a declarative JSON document compiled into the build; a copy
ships at config/schema_catalog.json for inspection and override. A catalog
that fails meta-validation refuses to load, which stops the build at start.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from .types import EVENT_KINDS

FIELD_TYPES = ("string", "integer", "number", "boolean", "instant", "content_ref")

CATALOG_ENV = "FL_SCHEMA_CATALOG"


class CatalogInvalid(ValueError):
    """The catalog document failed its own meta-validation."""


@dataclass(frozen=True)
class SchemaDefinition:
    kind: str
    version: int
    required_fields: tuple[tuple[str, str], ...]
    optional_fields: tuple[tuple[str, str], ...]

    @property
    def field_types(self) -> dict[str, str]:
        return dict(self.required_fields + self.optional_fields)


class SchemaCatalog:
    def __init__(self, definitions: list[SchemaDefinition], catalog_version: int):
        self.catalog_version = catalog_version
        self._by_key: dict[tuple[str, int], SchemaDefinition] = {}
        for d in definitions:
            key = (d.kind, d.version)
            if key in self._by_key:
                raise CatalogInvalid(f"duplicate schema for {key}")
            self._by_key[key] = d
        self._kinds = {d.kind for d in definitions}

    @property
    def kinds(self) -> set[str]:
        return set(self._kinds)

    def lookup(self, kind: str, version: int) -> Optional[SchemaDefinition]:
        return self._by_key.get((kind, version))

    def has_kind(self, kind: str) -> bool:
        return kind in self._kinds


def _parse_fields(raw, where: str) -> tuple[tuple[str, str], ...]:
    if not isinstance(raw, list):
        raise CatalogInvalid(f"{where}: field list must be an array")
    out = []
    for item in raw:
        if not (isinstance(item, list) and len(item) == 2):
            raise CatalogInvalid(f"{where}: fields are [name, type] pairs, got {item!r}")
        name, ftype = item
        if not isinstance(name, str) or not name:
            raise CatalogInvalid(f"{where}: bad field name {name!r}")
        if ftype not in FIELD_TYPES:
            raise CatalogInvalid(f"{where}.{name}: unknown field type {ftype!r}")
        out.append((name, ftype))
    return tuple(out)


def parse_catalog(doc: dict) -> SchemaCatalog:
    if not isinstance(doc, dict) or "schemas" not in doc:
        raise CatalogInvalid("catalog document must be an object with 'schemas'")
    version = doc.get("catalog_version")
    if not isinstance(version, int) or version < 1:
        raise CatalogInvalid(f"bad catalog_version: {version!r}")
    definitions = []
    for raw in doc["schemas"]:
        kind = raw.get("kind")
        if not isinstance(kind, str) or not kind:
            raise CatalogInvalid(f"schema with bad kind: {kind!r}")
        sv = raw.get("version")
        if not isinstance(sv, int) or sv < 1:
            raise CatalogInvalid(f"{kind}: bad schema version {sv!r}")
        required = _parse_fields(raw.get("required_fields", []), kind)
        optional = _parse_fields(raw.get("optional_fields", []), kind)
        names = [n for n, _ in required + optional]
        if len(names) != len(set(names)):
            raise CatalogInvalid(f"{kind}: duplicate field names")
        definitions.append(SchemaDefinition(kind, sv, required, optional))
    catalog = SchemaCatalog(definitions, version)
    missing = set(EVENT_KINDS) - catalog.kinds
    if missing:
        raise CatalogInvalid(f"built-in kinds without a schema: {sorted(missing)}")
    return catalog


def load_catalog(path: str | Path | None = None) -> SchemaCatalog:
    """Load and meta-validate a catalog.

    Resolution order: explicit path, FL_SCHEMA_CATALOG env var,
    ./config/schema_catalog.json, packaged default.
    """
    candidates = []
    if path is not None:
        candidates.append(Path(path))
    elif os.environ.get(CATALOG_ENV):
        candidates.append(Path(os.environ[CATALOG_ENV]))
    else:
        candidates.append(Path("config/schema_catalog.json"))
    for candidate in candidates:
        if candidate.is_file():
            return parse_catalog(json.loads(candidate.read_text("utf-8")))
    if path is not None:
        raise CatalogInvalid(f"catalog file not found: {path}")
    packaged = resources.files("fieldledger.events").joinpath("data/schema_catalog.json")
    return parse_catalog(json.loads(packaged.read_text("utf-8")))


_builtin: Optional[SchemaCatalog] = None


def builtin_catalog() -> SchemaCatalog:
    """The compiled-in catalog (packaged copy), cached."""
    global _builtin
    if _builtin is None:
        packaged = resources.files("fieldledger.events").joinpath(
            "data/schema_catalog.json"
        )
        _builtin = parse_catalog(json.loads(packaged.read_text("utf-8")))
    return _builtin
