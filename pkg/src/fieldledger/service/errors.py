"""Service-level errors with their HTTP mappings."""


class ServiceError(Exception):
    http_status = 500

    def to_wire(self) -> dict:
        return {"error": type(self).__name__, "message": str(self)}


class BatchMalformed(ServiceError):
    """Request body violates a batch-level invariant; nothing was ingested."""

    http_status = 400


class BadFilter(ServiceError):
    """Query filter, page limit, or cursor is invalid."""

    http_status = 400


class BadFlag(ServiceError):
    """Curation flag violates a field constraint."""

    http_status = 400


class NotFound(ServiceError):
    http_status = 404


class StorageUnavailable(ServiceError):
    """Commit contention exhausted its retry budget; the client may retry."""

    http_status = 503
