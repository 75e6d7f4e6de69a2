"""HTTP facade: JSON-over-HTTP routes plus static hosting for the console."""

from __future__ import annotations

import json
import logging
import mimetypes
import re
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qs, urlsplit

from ..store import UnknownTable, UnknownVersion
from ..tracker import RunTracker, UnknownRun
from .core import IngestionService
from .errors import BadFilter, BatchMalformed, ServiceError

logger = logging.getLogger("fieldledger.service")

MAX_BODY_BYTES = 32 * 1024 * 1024

_TABLE_ROUTE = re.compile(r"^/v1/tables/([a-z0-9_]{1,64})/(versions|rows)$")
_RUN_ROUTE = re.compile(r"^/v1/runs/([0-9A-HJKMNP-TV-Z]{26})$")


def _reject_constant(name: str):
    raise ValueError(f"{name} is not valid JSON")


def parse_json(body: bytes):
    """Strict JSON: NaN/Infinity are rejected rather than smuggled into rows."""
    return json.loads(body, parse_constant=_reject_constant)


def _parse_online(value: str) -> bool:
    if value == "true":
        return True
    if value == "false":
        return False
    raise BadFilter(f"online must be true or false, got {value!r}")


def _parse_limit(value: str) -> int:
    if not re.fullmatch(r"\d+", value):
        raise BadFilter(f"limit must be an integer, got {value!r}")
    return int(value)


class ApiHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "fieldledger"
    # buffered writes + no Nagle: headers and body leave as one packet,
    # sidestepping the 40 ms delayed-ACK stall on keep-alive connections
    wbufsize = 64 * 1024
    disable_nagle_algorithm = True

    # BaseHTTPRequestHandler writes access lines to stderr; route to logging
    def log_message(self, format, *args):
        logger.debug("%s %s", self.address_string(), format % args)

    @property
    def service(self) -> IngestionService:
        return self.server.service

    # -- plumbing ----------------------------------------------------------

    def _send_json(self, status: int, doc) -> None:
        body = json.dumps(doc, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error_doc(self, exc: ServiceError) -> None:
        self._send_json(exc.http_status, exc.to_wire())

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        if length <= 0:
            raise BatchMalformed("request body required")
        if length > MAX_BODY_BYTES:
            raise BatchMalformed(f"body exceeds {MAX_BODY_BYTES} bytes")
        return self.rfile.read(length)

    def _query(self, raw_query: str, allowed: set[str]) -> dict[str, str]:
        params = parse_qs(raw_query, keep_blank_values=True)
        unknown = set(params) - allowed
        if unknown:
            raise BadFilter(f"unknown query parameters: {sorted(unknown)}")
        flat = {}
        for key, values in params.items():
            if len(values) > 1:
                raise BadFilter(f"duplicate query parameter: {key}")
            flat[key] = values[0]
        return flat

    def _dispatch(self, method: str) -> None:
        split = urlsplit(self.path)
        path = split.path
        try:
            handler = self._route(method, path)
            if handler is None:
                self._send_json(404, {"error": "NotFound", "message": path})
                return
            handler(split.query)
        except ServiceError as exc:
            self._send_error_doc(exc)
        except (UnknownTable, UnknownVersion, UnknownRun) as exc:
            self._send_json(404, {"error": type(exc).__name__, "message": str(exc)})
        except Exception:
            logger.exception("unhandled error for %s %s", method, path)
            self._send_json(500, {"error": "Internal", "message": "unhandled error"})

    def _route(self, method: str, path: str):
        if method == "POST" and path == "/v1/events:batch":
            return self._post_batch
        if method == "POST" and path == "/v1/curation/flags":
            return self._post_flag
        if method == "GET":
            if path == "/v1/events":
                return self._get_events
            if path == "/v1/quarantine":
                return self._get_quarantine
            if path == "/v1/curation/flags":
                return self._get_flags
            if path == "/healthz":
                return self._get_health
            if path == "/v1/runs":
                return self._get_runs
            match = _RUN_ROUTE.match(path)
            if match:
                run_id = match.group(1)
                return lambda q: self._get_run(run_id)
            match = _TABLE_ROUTE.match(path)
            if match:
                name, what = match.groups()
                if what == "versions":
                    return lambda q: self._get_table_versions(name)
                return lambda q: self._get_table_rows(name, q)
            if path == "/console" or path.startswith("/console/"):
                return lambda q: self._get_console(path)
        return None

    def do_GET(self):  # noqa: N802 (http.server naming)
        self._dispatch("GET")

    def do_POST(self):  # noqa: N802
        self._dispatch("POST")

    # -- routes ------------------------------------------------------------

    def _post_batch(self, raw_query: str) -> None:
        body = self._read_body()
        try:
            request = parse_json(body)
        except ValueError as exc:
            raise BatchMalformed(f"body is not valid JSON: {exc}") from None
        response = self.service.ingest_batch(request, _now_ms())
        self._send_json(200, response)

    def _post_flag(self, raw_query: str) -> None:
        body = self._read_body()
        try:
            doc = parse_json(body)
        except ValueError as exc:
            raise BatchMalformed(f"body is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise BatchMalformed("flag body must be a JSON object")
        flag = self.service.flag_record(
            doc.get("event_id"),
            doc.get("verdict"),
            doc.get("note", ""),
            doc.get("actor"),
            _now_ms(),
        )
        self._send_json(200, flag)

    def _get_events(self, raw_query: str) -> None:
        params = self._query(
            raw_query, {"user_id", "kind", "from", "to", "online", "limit", "cursor"}
        )
        filter = {
            k: params[k] for k in ("user_id", "kind", "from", "to") if k in params
        }
        if "online" in params:
            filter["online"] = _parse_online(params["online"])
        limit = _parse_limit(params["limit"]) if "limit" in params else None
        self._send_json(
            200,
            self.service.query_events(
                filter, limit=limit, cursor=params.get("cursor")
            ),
        )

    def _get_quarantine(self, raw_query: str) -> None:
        params = self._query(raw_query, {"limit", "cursor"})
        limit = _parse_limit(params["limit"]) if "limit" in params else None
        self._send_json(
            200,
            self.service.list_quarantine(limit=limit, cursor=params.get("cursor")),
        )

    def _get_flags(self, raw_query: str) -> None:
        params = self._query(raw_query, {"event_id"})
        flags = self.service.active_flags(params.get("event_id"))
        self._send_json(200, {"flags": flags})

    def _get_health(self, raw_query: str) -> None:
        self._send_json(200, {"ok": True, "tables": self.service.store.table_names()})

    def _get_runs(self, raw_query: str) -> None:
        self._send_json(200, {"runs": self.server.tracker.list_runs()})

    def _get_run(self, run_id: str) -> None:
        self._send_json(200, self.server.tracker.get_run(run_id))

    def _get_table_versions(self, name: str) -> None:
        self._send_json(
            200, {"table": name, "versions": self.service.table_versions(name)}
        )

    def _get_table_rows(self, name: str, raw_query: str) -> None:
        params = self._query(raw_query, {"version"})
        version = None
        if "version" in params:
            if not re.fullmatch(r"\d+", params["version"]):
                raise BadFilter(f"version must be an integer, got {params['version']!r}")
            version = int(params["version"])
        self._send_json(200, self.service.table_rows(name, version))

    # -- console static files ------------------------------------------------

    def _get_console(self, path: str) -> None:
        root: Optional[Path] = self.server.console_dir
        if root is None:
            self._send_json(404, {"error": "NotFound", "message": "no console deployed"})
            return
        rel = path[len("/console") :].lstrip("/") or "index.html"
        target = (root / rel).resolve()
        if not str(target).startswith(str(root.resolve())) or not target.is_file():
            self._send_json(404, {"error": "NotFound", "message": path})
            return
        ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        data = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


def _now_ms() -> int:
    return int(time.time() * 1000)


class ApiServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, service: IngestionService, console_dir=None):
        super().__init__(address, ApiHandler)
        self.service = service
        self.tracker = RunTracker(service.store.root, store=service.store)
        self.console_dir = Path(console_dir) if console_dir else None


def create_server(
    data_dir,
    *,
    host: str = "127.0.0.1",
    port: int = 8080,
    batch_limit: int = 100,
    console_dir=None,
) -> ApiServer:
    service = IngestionService(data_dir, batch_limit=batch_limit)
    return ApiServer((host, port), service, console_dir=console_dir)
