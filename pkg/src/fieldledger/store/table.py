"""Embedded append-only table storage with time travel.

On-disk layout per table:

    <root>/<table>/_log/00000001.json     one commit record per version
    <root>/<table>/<sha256-hex>.ndjson    immutable content-addressed rows

A commit writes the data file first, then publishes the log entry with an
exclusive hard link: the link is both the atomic commit point and the
optimistic-concurrency arbitration. A crash at any step leaves the table
readable at either the old or the new version, never in between.
"""

from __future__ import annotations

import hashlib
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Optional

from ..events.canonical import canonical_bytes, parse

TABLE_NAME_RE = re.compile(r"^[a-z0-9_]{1,64}$")

_LOG_ENTRY_RE = re.compile(r"^(\d{8})\.json$")


class StoreError(Exception):
    pass


class UnknownTable(StoreError):
    pass


class UnknownVersion(StoreError):
    pass


class VersionConflict(StoreError):
    """expected_version was stale; nothing was committed."""


class IntegrityError(StoreError):
    """A referenced data file is missing or fails digest verification."""


@dataclass(frozen=True)
class CommitRecord:
    version: int
    parent: int
    files: tuple[dict, ...]  # {"name", "row_count", "sha256"}
    committed_at: int        # epoch ms
    op_meta: dict

    @property
    def row_count(self) -> int:
        return sum(f["row_count"] for f in self.files)

    def to_wire(self) -> dict:
        return {
            "version": self.version,
            "parent": self.parent,
            "files": list(self.files),
            "committed_at": self.committed_at,
            "op_meta": self.op_meta,
        }


@dataclass
class IntegrityReport:
    table: str
    latest_version: int
    files_checked: int = 0
    problems: list[dict] = field(default_factory=list)
    orphans: list[str] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.problems

    def to_wire(self) -> dict:
        return {
            "table": self.table,
            "latest_version": self.latest_version,
            "files_checked": self.files_checked,
            "problems": self.problems,
            "orphans": self.orphans,
            "clean": self.clean,
        }


def _fsync_dir(path: Path) -> None:
    fd = os.open(path, os.O_RDONLY)
    try:
        os.fsync(fd)
    finally:
        os.close(fd)


class Table:
    """One named table. Safe for concurrent readers and multi-writer commits."""

    def __init__(self, root: str | Path, name: str, create: bool = True):
        if not TABLE_NAME_RE.match(name):
            raise ValueError(f"bad table name: {name!r}")
        self.name = name
        self.dir = Path(root) / name
        self.log_dir = self.dir / "_log"
        if create:
            self.log_dir.mkdir(parents=True, exist_ok=True)
        elif not self.log_dir.is_dir():
            raise UnknownTable(name)
        self._lock = threading.Lock()
        self._latest_mark = 0
        self._records: dict[int, CommitRecord] = {}
        self._rows_cache: dict[str, tuple] = {}
        # test seam: called with a step name at each point of the commit
        # sequence so crash behavior is checkable at every step
        self._crash_hook: Optional[Callable[[str], None]] = None

    # -- reads -----------------------------------------------------------

    def _scan_latest(self) -> int:
        best = 0
        try:
            names = os.listdir(self.log_dir)
        except FileNotFoundError:
            raise UnknownTable(self.name) from None
        for entry in names:
            m = _LOG_ENTRY_RE.match(entry)
            if m:
                best = max(best, int(m.group(1)))
        return best

    def latest(self) -> int:
        # versions are dense (exclusive-create at latest+1), so probing
        # forward from the last known version beats re-listing the log dir
        v = self._latest_mark
        if v == 0 and not self.log_dir.is_dir():
            raise UnknownTable(self.name)
        while os.path.exists(self.log_dir / f"{v + 1:08d}.json"):
            v += 1
        self._latest_mark = v
        return v

    def _record(self, version: int) -> CommitRecord:
        with self._lock:
            cached = self._records.get(version)
        if cached is not None:
            return cached
        path = self.log_dir / f"{version:08d}.json"
        try:
            doc = parse(path.read_bytes())
        except FileNotFoundError:
            raise UnknownVersion(f"{self.name}@{version}") from None
        record = CommitRecord(
            version=doc["version"],
            parent=doc["parent"],
            files=tuple(doc["files"]),
            committed_at=doc["committed_at"],
            op_meta=doc.get("op_meta") or {},
        )
        with self._lock:
            self._records[version] = record
        return record

    def history(self) -> list[CommitRecord]:
        return [self._record(v) for v in range(1, self.latest() + 1)]

    def _file_rows(self, name: str) -> tuple:
        with self._lock:
            cached = self._rows_cache.get(name)
        if cached is not None:
            return cached
        data = (self.dir / name).read_bytes()
        rows = tuple(parse(line) for line in data.splitlines() if line)
        with self._lock:
            self._rows_cache[name] = rows
        return rows

    def read_commit(self, version: int) -> list[Any]:
        """Rows added by exactly this commit."""
        record = self._record(version)
        rows: list[Any] = []
        for f in record.files:
            rows.extend(self._file_rows(f["name"]))
        return rows

    def read_at(self, version: int) -> list[Any]:
        """The full row set as of a version. Byte-stable forever."""
        if version < 0 or version > self.latest():
            raise UnknownVersion(f"{self.name}@{version}")
        rows: list[Any] = []
        for v in range(1, version + 1):
            rows.extend(self.read_commit(v))
        return rows

    def rowset_digest(self, version: int) -> str:
        """SHA-256 over the serialized row set at a version."""
        if version < 0 or version > self.latest():
            raise UnknownVersion(f"{self.name}@{version}")
        digest = hashlib.sha256()
        for v in range(1, version + 1):
            for f in self._record(v).files:
                digest.update((self.dir / f["name"]).read_bytes())
        return digest.hexdigest()

    # -- writes ----------------------------------------------------------

    def _step(self, name: str) -> None:
        if self._crash_hook is not None:
            self._crash_hook(name)

    def commit(
        self,
        rows: Iterable[Any],
        expected_version: int,
        op_meta: Optional[dict] = None,
        committed_at: Optional[int] = None,
    ) -> int:
        """Append rows as one atomic commit. Returns the new version."""
        encoded = [canonical_bytes(r) for r in rows]
        if not encoded:
            raise ValueError("commit requires at least one row")
        current = self.latest()
        if expected_version != current:
            raise VersionConflict(
                f"{self.name}: expected {expected_version}, latest is {current}"
            )

        blob = b"".join(line + b"\n" for line in encoded)
        digest = hashlib.sha256(blob).hexdigest()
        data_name = f"{digest}.ndjson"
        data_path = self.dir / data_name

        self._step("begin")
        if data_path.exists():
            # identical content committed before; reuse after re-verifying
            actual = hashlib.sha256(data_path.read_bytes()).hexdigest()
            if actual != digest:
                raise IntegrityError(f"{data_name} hashes to {actual}")
        else:
            tmp = self.dir / f".{digest}.{os.getpid()}.{threading.get_ident()}.tmp"
            with open(tmp, "wb") as f:
                f.write(blob)
                self._step("data_written")
                f.flush()
                os.fsync(f.fileno())
            self._step("data_synced")
            os.rename(tmp, data_path)
            _fsync_dir(self.dir)
        self._step("data_published")

        if committed_at is None:
            committed_at = int(time.time() * 1000)
        version = current + 1
        record = CommitRecord(
            version=version,
            parent=current,
            files=({"name": data_name, "row_count": len(encoded), "sha256": digest},),
            committed_at=committed_at,
            op_meta=op_meta or {},
        )
        log_tmp = self.log_dir / f".{version:08d}.{os.getpid()}.{threading.get_ident()}.tmp"
        with open(log_tmp, "wb") as f:
            f.write(canonical_bytes(record.to_wire()))
            self._step("log_written")
            f.flush()
            os.fsync(f.fileno())
        self._step("log_synced")
        log_path = self.log_dir / f"{version:08d}.json"
        try:
            # exclusive create is the commit point and the write arbitration
            os.link(log_tmp, log_path)
        except FileExistsError:
            os.unlink(log_tmp)
            raise VersionConflict(
                f"{self.name}: lost the race for version {version}"
            ) from None
        os.unlink(log_tmp)
        _fsync_dir(self.log_dir)
        self._step("log_published")
        with self._lock:
            self._records[version] = record
            self._latest_mark = max(self._latest_mark, version)
        return version

    # -- maintenance -----------------------------------------------------

    def verify(self) -> IntegrityReport:
        """Re-hash every referenced file and check log continuity."""
        latest = self._scan_latest()  # full scan so gaps surface as problems
        report = IntegrityReport(table=self.name, latest_version=latest)
        referenced: dict[str, list[int]] = {}
        for v in range(1, latest + 1):
            path = self.log_dir / f"{v:08d}.json"
            if not path.exists():
                report.problems.append(
                    {"kind": "missing_log_entry", "version": v, "message": f"no log entry for version {v}"}
                )
                continue
            try:
                record = self._record(v)
            except Exception as exc:
                report.problems.append(
                    {"kind": "unreadable_log_entry", "version": v, "message": str(exc)}
                )
                continue
            if record.parent != v - 1 or record.version != v:
                report.problems.append(
                    {"kind": "broken_chain", "version": v,
                     "message": f"entry {v} claims version={record.version} parent={record.parent}"}
                )
            for f in record.files:
                referenced.setdefault(f["name"], []).append(v)

        for name in sorted(referenced):
            versions = referenced[name]
            path = self.dir / name
            report.files_checked += 1
            if not path.exists():
                report.problems.append(
                    {"kind": "missing_file", "file": name, "versions": versions,
                     "message": f"data file {name} referenced by versions {versions} is missing"}
                )
                continue
            actual = hashlib.sha256(path.read_bytes()).hexdigest()
            if f"{actual}.ndjson" != name:
                report.problems.append(
                    {"kind": "digest_mismatch", "file": name, "versions": versions,
                     "message": f"data file {name} hashes to {actual}; versions {versions} affected"}
                )

        for entry in sorted(os.listdir(self.dir)):
            path = self.dir / entry
            if path.is_dir() or entry.startswith("."):
                continue
            if entry.endswith(".ndjson") and entry not in referenced:
                report.orphans.append(entry)
        return report


class Store:
    """A directory of tables sharing one root."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._tables: dict[str, Table] = {}
        self._lock = threading.Lock()

    def table(self, name: str) -> Table:
        with self._lock:
            if name not in self._tables:
                self._tables[name] = Table(self.root, name, create=True)
            return self._tables[name]

    def open_table(self, name: str) -> Table:
        """Open without creating; raises UnknownTable."""
        with self._lock:
            if name not in self._tables:
                self._tables[name] = Table(self.root, name, create=False)
            return self._tables[name]

    def table_names(self) -> list[str]:
        names = []
        for entry in sorted(os.listdir(self.root)):
            if TABLE_NAME_RE.match(entry) and (self.root / entry / "_log").is_dir():
                names.append(entry)
        return names
