"""Append-only versioned table storage with time travel."""

from .table import (
    CommitRecord,
    IntegrityError,
    IntegrityReport,
    Store,
    StoreError,
    Table,
    UnknownTable,
    UnknownVersion,
    VersionConflict,
)

__all__ = [
    "CommitRecord",
    "IntegrityError",
    "IntegrityReport",
    "Store",
    "StoreError",
    "Table",
    "UnknownTable",
    "UnknownVersion",
    "VersionConflict",
]
