"""Durable FIFO event queue backed by an append-only record file.

File format, little-endian:

    magic "FLQ1"
    records of [u32 length | u32 CRC32C of body | body bytes]

where body is one canonical envelope. A torn final record (short length
prefix, short body, or checksum mismatch) is truncated away on restore and
counted as a warning; everything before it survives byte-for-byte.
"""

from __future__ import annotations

import os
import struct
import threading
from collections import deque
from pathlib import Path

from .crc32c import crc32c

MAGIC = b"FLQ1"
_HEADER = struct.Struct("<II")  # length, crc32c

DEFAULT_CAPACITY = 100_000


class QueueFull(Exception):
    """Queue is at capacity; the event was refused."""


class StorageCorrupt(Exception):
    """The queue file header is unreadable."""


class DurableQueue:
    """FIFO of canonical envelope byte records, durable across restarts.

    Appends are serialized by an internal lock. Head removal rewrites the
    file atomically (tmp + rename), which keeps the on-disk format purely
    append-only between removals.
    """

    def __init__(self, storage_path: str | Path, capacity: int = DEFAULT_CAPACITY):
        self.storage_path = Path(storage_path)
        self.capacity = capacity
        self.truncation_warnings = 0
        self._lock = threading.Lock()
        self._entries: deque[bytes] = deque()
        self._restore()

    # -- restore ---------------------------------------------------------

    def _restore(self) -> None:
        path = self.storage_path
        path.parent.mkdir(parents=True, exist_ok=True)
        if not path.exists() or path.stat().st_size == 0:
            with open(path, "wb") as f:
                f.write(MAGIC)
                f.flush()
                os.fsync(f.fileno())
            return
        data = path.read_bytes()
        if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
            raise StorageCorrupt(f"bad queue file header in {path}")
        offset = len(MAGIC)
        good_end = offset
        while offset < len(data):
            if offset + _HEADER.size > len(data):
                break  # torn length prefix
            length, checksum = _HEADER.unpack_from(data, offset)
            body_start = offset + _HEADER.size
            body_end = body_start + length
            if body_end > len(data):
                break  # torn body
            body = data[body_start:body_end]
            if crc32c(body) != checksum:
                break  # torn or corrupted record
            self._entries.append(body)
            offset = body_end
            good_end = offset
        if good_end < len(data):
            self.truncation_warnings += 1
            with open(path, "r+b") as f:
                f.truncate(good_end)
                f.flush()
                os.fsync(f.fileno())

    # -- operations ------------------------------------------------------

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def append(self, record: bytes) -> None:
        with self._lock:
            if len(self._entries) >= self.capacity:
                raise QueueFull(f"queue at capacity {self.capacity}")
            with open(self.storage_path, "ab") as f:
                f.write(_HEADER.pack(len(record), crc32c(record)))
                f.write(record)
                f.flush()
                os.fsync(f.fileno())
            self._entries.append(record)

    def peek(self, n: int) -> list[bytes]:
        """The first n records without removing them."""
        with self._lock:
            return [self._entries[i] for i in range(min(n, len(self._entries)))]

    def remove_head(self, n: int) -> None:
        """Drop the first n records and persist the remainder atomically."""
        if n <= 0:
            return
        with self._lock:
            for _ in range(min(n, len(self._entries))):
                self._entries.popleft()
            tmp = self.storage_path.with_suffix(".tmp")
            with open(tmp, "wb") as f:
                f.write(MAGIC)
                for body in self._entries:
                    f.write(_HEADER.pack(len(body), crc32c(body)))
                    f.write(body)
                f.flush()
                os.fsync(f.fileno())
            os.replace(tmp, self.storage_path)

    def snapshot(self) -> list[bytes]:
        with self._lock:
            return list(self._entries)
