"""Sortable unique entry identifiers.

26-character Crockford base32 strings: 48 bits of millisecond timestamp
followed by 80 bits of randomness, so ids sort by creation time and merge
cleanly across machines without coordination.
"""

from __future__ import annotations

import os
import threading
import time

_ALPHABET = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"
_ID_LEN = 26


def _encode(value: int) -> str:
    chars = []
    for _ in range(_ID_LEN):
        chars.append(_ALPHABET[value & 0x1F])
        value >>= 5
    return "".join(reversed(chars))


class IdGenerator:
    """Monotonic id source; strictly increasing within one generator."""

    def __init__(self, clock=time.time, randbits=None):
        self._clock = clock
        self._randbits = randbits or (lambda n: int.from_bytes(os.urandom(n // 8), "big"))
        self._lock = threading.Lock()
        self._last = -1

    def new_id(self) -> str:
        with self._lock:
            millis = int(self._clock() * 1000) & ((1 << 48) - 1)
            value = (millis << 80) | self._randbits(80)
            if value <= self._last:
                value = self._last + 1
            self._last = value
            return _encode(value)


_default = IdGenerator()


def new_id() -> str:
    return _default.new_id()
