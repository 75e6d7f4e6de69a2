"""Time-sortable unique identifiers mintable without a server.

26 characters of Crockford base32 (uppercase): a 48-bit millisecond
timestamp followed by 80 random bits. Instances minted by one factory are
strictly lexicographically increasing, even within the same millisecond or
across a backwards clock jump.
"""

from __future__ import annotations

import random
import re
import threading
import time

CROCKFORD = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"

ULID_RE = re.compile(r"^[0-7][0-9A-HJKMNP-TV-Z]{25}$")

_TIME_BITS = 48
_RAND_BITS = 80


def _encode(value: int, chars: int) -> str:
    out = []
    for _ in range(chars):
        out.append(CROCKFORD[value & 0x1F])
        value >>= 5
    return "".join(reversed(out))


def is_valid(s: object) -> bool:
    return isinstance(s, str) and ULID_RE.match(s) is not None


def timestamp_ms(ulid: str) -> int:
    """Millisecond timestamp encoded in the first 10 characters."""
    if not is_valid(ulid):
        raise ValueError(f"not a ULID: {ulid!r}")
    value = 0
    for ch in ulid[:10]:
        value = (value << 5) | CROCKFORD.index(ch)
    return value


class UlidFactory:
    """Mints monotonically increasing ULIDs.

    clock_ms and rng are injectable so SDK instances under simulation stay
    deterministic; defaults use wall clock and a process-local RNG.
    """

    def __init__(self, clock_ms=None, rng: random.Random | None = None):
        self._clock_ms = clock_ms or (lambda: int(time.time() * 1000))
        self._rng = rng or random.Random()
        self._lock = threading.Lock()
        self._last_ms = -1
        self._last_rand = 0

    def new(self) -> str:
        with self._lock:
            now = self._clock_ms()
            if now <= self._last_ms:
                # same tick or clock went backwards: bump the random part
                self._last_rand += 1
                if self._last_rand >= (1 << _RAND_BITS):
                    # random part overflowed; borrow a millisecond
                    self._last_ms += 1
                    self._last_rand = 0
            else:
                self._last_ms = now
                self._last_rand = self._rng.getrandbits(_RAND_BITS)
            return _encode(self._last_ms, 10) + _encode(self._last_rand, 16)


_default_factory = UlidFactory()


def new_ulid() -> str:
    return _default_factory.new()
