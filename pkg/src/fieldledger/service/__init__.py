"""Ingestion service: validation edge, dedup, quarantine, query API."""

from .core import IngestionService
from .errors import (
    BadFilter,
    BadFlag,
    BatchMalformed,
    NotFound,
    ServiceError,
    StorageUnavailable,
)
from .http_server import ApiServer, create_server

__all__ = [
    "ApiServer",
    "BadFilter",
    "BadFlag",
    "BatchMalformed",
    "IngestionService",
    "NotFound",
    "ServiceError",
    "StorageUnavailable",
    "create_server",
]
