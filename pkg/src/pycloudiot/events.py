"""Event scheduling for the actors.

Two interchangeable schedulers drive the same actor code: a discrete-event
one (simulated clock, fully deterministic: ties resolve in scheduling order)
and a wall-clock one backed by a driver thread for live deployments.
"""

from __future__ import annotations

import heapq
import itertools
import threading
import time


class EventHandle:
    __slots__ = ("cancelled",)

    def __init__(self):
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True


class SimScheduler:
    """Deterministic discrete-event scheduler with a simulated clock."""

    def __init__(self):
        self._heap: list[tuple[float, int, EventHandle, object, tuple]] = []
        self._seq = itertools.count()
        self.now = 0.0

    def call_at(self, when: float, fn, *args) -> EventHandle:
        if when < self.now:
            when = self.now
        handle = EventHandle()
        heapq.heappush(self._heap, (when, next(self._seq), handle, fn, args))
        return handle

    def call_later(self, delay: float, fn, *args) -> EventHandle:
        return self.call_at(self.now + max(0.0, delay), fn, *args)

    def run(self, until: float | None = None) -> None:
        """Process events in (time, insertion) order, optionally up to a cap."""
        while self._heap:
            when, _, handle, fn, args = self._heap[0]
            if until is not None and when > until:
                break
            heapq.heappop(self._heap)
            if handle.cancelled:
                continue
            self.now = when
            fn(*args)
        if until is not None and self.now < until:
            self.now = until

    def pending(self) -> int:
        return sum(1 for _, _, h, _, _ in self._heap if not h.cancelled)


class RealTimeScheduler:
    """Same interface driven by the wall clock; events run on a driver thread."""

    def __init__(self):
        self._heap: list[tuple[float, int, EventHandle, object, tuple]] = []
        self._seq = itertools.count()
        self._cond = threading.Condition()
        self._stopped = False
        self._epoch = time.monotonic()
        self._thread = threading.Thread(target=self._drive, daemon=True)

    @property
    def now(self) -> float:
        return time.monotonic() - self._epoch

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        with self._cond:
            self._stopped = True
            self._cond.notify()
        self._thread.join(timeout=5)

    def call_at(self, when: float, fn, *args) -> EventHandle:
        handle = EventHandle()
        with self._cond:
            heapq.heappush(self._heap, (when, next(self._seq), handle, fn, args))
            self._cond.notify()
        return handle

    def call_later(self, delay: float, fn, *args) -> EventHandle:
        return self.call_at(self.now + max(0.0, delay), fn, *args)

    def _drive(self) -> None:
        while True:
            with self._cond:
                if self._stopped:
                    return
                if not self._heap:
                    self._cond.wait(timeout=0.5)
                    continue
                when, _, handle, fn, args = self._heap[0]
                wait = when - self.now
                if wait > 0:
                    self._cond.wait(timeout=min(wait, 0.5))
                    continue
                heapq.heappop(self._heap)
            if not handle.cancelled:
                try:
                    fn(*args)
                except Exception:  # keep the driver alive; actors log their own errors
                    import logging
                    logging.getLogger(__name__).exception("event callback failed")
