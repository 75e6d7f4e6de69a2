"""Run registry: parameters, metrics, and pinned data-snapshot versions."""

from __future__ import annotations

import fcntl
import json
import math
import os
import tempfile
import threading
import time
from pathlib import Path
from typing import Any, Optional

from ..events import canonical_bytes, epoch_ms_to_instant
from ..events.ulid import UlidFactory
from ..store import Store, UnknownVersion

STATUSES = ("running", "finished", "failed")


class TrackerError(Exception):
    pass


class UnknownRun(TrackerError):
    pass


class RunClosed(TrackerError):
    """The run already left `running`; its record is immutable."""


class RunTracker:
    """One JSON document per run under `<root>/runs/`.

    Mutations are read-modify-write under an OS file lock, so appends are
    serialized across threads and processes; the final write is an atomic
    replace, so readers never see a torn document.
    """

    def __init__(self, data_dir: str | Path, store: Optional[Store] = None):
        self.data_dir = Path(data_dir)
        self.runs_dir = self.data_dir / "runs"
        self.runs_dir.mkdir(parents=True, exist_ok=True)
        self.store = store or Store(self.data_dir)
        self._ulids = UlidFactory()
        self._lock = threading.Lock()

    # -- document plumbing -------------------------------------------------

    def _path(self, run_id: str) -> Path:
        return self.runs_dir / f"{run_id}.json"

    def _read(self, run_id: str) -> dict:
        try:
            return json.loads(self._path(run_id).read_bytes())
        except FileNotFoundError:
            raise UnknownRun(run_id) from None

    def _write(self, run_id: str, doc: dict) -> None:
        fd, tmp = tempfile.mkstemp(dir=self.runs_dir, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(canonical_bytes(doc))
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self._path(run_id))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def _mutate(self, run_id: str, fn) -> dict:
        lock_path = self.runs_dir / f".{run_id}.lock"
        with self._lock, open(lock_path, "w") as lock:
            fcntl.flock(lock, fcntl.LOCK_EX)
            doc = self._read(run_id)
            doc = fn(doc)
            self._write(run_id, doc)
        return doc

    # -- operations ----------------------------------------------------------

    def create_run(
        self,
        name: str,
        snapshot_refs: list[tuple[str, int]],
        *,
        params: Optional[dict[str, str]] = None,
        now_ms: Optional[int] = None,
    ) -> dict:
        """Open a run, pinning each (table, version) and its content digest."""
        if not isinstance(name, str) or not name:
            raise ValueError("run name must be a non-empty string")
        now_ms = int(time.time() * 1000) if now_ms is None else now_ms
        refs = []
        for table_name, version in snapshot_refs:
            table = self.store.open_table(table_name)
            if not isinstance(version, int) or not 0 <= version <= table.latest():
                raise UnknownVersion(f"{table_name}@{version}")
            refs.append(
                {
                    "table": table_name,
                    "version": version,
                    "rowset_digest": table.rowset_digest(version),
                }
            )
        params = {str(k): str(v) for k, v in (params or {}).items()}
        doc = {
            "run_id": self._ulids.new(),
            "name": name,
            "status": "running",
            "params": params,
            "logged_metrics": [],
            "snapshot_refs": refs,
            "started": epoch_ms_to_instant(now_ms),
            "ended": None,
        }
        self._write(doc["run_id"], doc)
        return doc

    def log_metric(
        self,
        run_id: str,
        key: str,
        value: float,
        step: int,
        *,
        now_ms: Optional[int] = None,
    ) -> dict:
        if not isinstance(key, str) or not key:
            raise ValueError("metric key must be a non-empty string")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"metric value must be numeric, got {value!r}")
        if not math.isfinite(value):
            raise ValueError("metric value must be finite")
        if isinstance(step, bool) or not isinstance(step, int) or step < 0:
            raise ValueError(f"step must be a non-negative integer, got {step!r}")
        now_ms = int(time.time() * 1000) if now_ms is None else now_ms

        def append(doc: dict) -> dict:
            if doc["status"] != "running":
                raise RunClosed(f"{run_id} is {doc['status']}")
            doc["logged_metrics"].append(
                {
                    "key": key,
                    "value": value,
                    "step": step,
                    "logged_at": epoch_ms_to_instant(now_ms),
                }
            )
            return doc

        return self._mutate(run_id, append)

    def set_params(self, run_id: str, params: dict[str, str]) -> dict:
        def update(doc: dict) -> dict:
            if doc["status"] != "running":
                raise RunClosed(f"{run_id} is {doc['status']}")
            doc["params"].update({str(k): str(v) for k, v in params.items()})
            return doc

        return self._mutate(run_id, update)

    def finalize_run(
        self, run_id: str, status: str, *, now_ms: Optional[int] = None
    ) -> dict:
        if status not in ("finished", "failed"):
            raise ValueError(f"status must be finished or failed, got {status!r}")
        now_ms = int(time.time() * 1000) if now_ms is None else now_ms

        def close(doc: dict) -> dict:
            if doc["status"] != "running":
                raise RunClosed(f"{run_id} is already {doc['status']}")
            doc["status"] = status
            doc["ended"] = epoch_ms_to_instant(now_ms)
            return doc

        return self._mutate(run_id, close)

    # -- retrieval -----------------------------------------------------------

    def get_run(self, run_id: str) -> dict:
        doc = self._read(run_id)
        # per-key sequences come back in step order; ties keep append order
        doc["logged_metrics"].sort(key=lambda m: (m["key"], m["step"]))
        return doc

    def list_runs(self) -> list[dict]:
        runs = []
        for path in sorted(self.runs_dir.glob("*.json")):
            runs.append(self.get_run(path.stem))
        return runs

    def verify_snapshots(self, run_id: str) -> list[dict]:
        """Recompute pinned digests; a non-empty result means drifted inputs."""
        doc = self._read(run_id)
        mismatches = []
        for ref in doc["snapshot_refs"]:
            table = self.store.open_table(ref["table"])
            current = table.rowset_digest(ref["version"])
            if current != ref["rowset_digest"]:
                mismatches.append(
                    {
                        "table": ref["table"],
                        "version": ref["version"],
                        "recorded": ref["rowset_digest"],
                        "current": current,
                    }
                )
        return mismatches
