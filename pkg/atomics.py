"""
Small atomic primitives shared by loader workers.
"""
import time
from threading import Lock
from typing import Tuple


class AtomicFlag:
    """
    One-shot test-and-set flag.

    Backed by a lock that is acquired without blocking and never released,
    so exactly one caller ever sees the flag clear.
    """

    def __init__(self):
        self._lock = Lock()

    def test_and_set(self) -> bool:
        """Set the flag; return True if it was already set."""
        return not self._lock.acquire(blocking=False)

    def is_set(self) -> bool:
        return self._lock.locked()


class AtomicInt:
    def __init__(self, initial_value: int = 0):
        self._value = initial_value
        self._lock = Lock()

    def __str__(self):
        return f"AtomicInt[value={self._value}]"

    def get(self) -> int:
        with self._lock:
            return self._value

    def increment_and_get(self) -> int:
        with self._lock:
            self._value += 1
            return self._value


class SessionClock:
    """
    Monotone microsecond clock plus a session-wide event sequence.

    ``stamp()`` draws both together so sequence order and timestamp order
    never disagree. This is the session's global counter; each session owns
    its own clock.
    """

    def __init__(self):
        self._origin_ns = time.perf_counter_ns()
        self._seq = 0
        self._lock = Lock()

    def now_us(self) -> int:
        return (time.perf_counter_ns() - self._origin_ns) // 1000

    def stamp(self) -> Tuple[int, int]:
        """Return (sequence, timestamp_us) for the next event."""
        with self._lock:
            self._seq += 1
            return self._seq, self.now_us()
