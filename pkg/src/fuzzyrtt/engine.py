"""Deterministic discrete-event engine.

Simulated time is an integer number of nanoseconds. Events with equal time
run in submission order (a monotonically increasing sequence number breaks
ties), so a run is fully determined by its inputs and seeds.
"""

from __future__ import annotations

import heapq
from itertools import count
from typing import Any, Callable

NS_PER_SEC = 1_000_000_000
NS_PER_MS = 1_000_000

# Event kinds, recorded in traces.
PACKET_ARRIVAL = "packet-arrival"
PACKET_DEPARTURE = "packet-departure"
TIMER_FIRE = "timer-fire"
APP_START = "app-start"
APP_STOP = "app-stop"

EVENT_KINDS = (PACKET_ARRIVAL, PACKET_DEPARTURE, TIMER_FIRE, APP_START, APP_STOP)


def seconds(value: float) -> int:
    return round(value * NS_PER_SEC)


def millis(value: float) -> int:
    return round(value * NS_PER_MS)


def to_seconds(ticks: int) -> float:
    return ticks / NS_PER_SEC


def to_millis(ticks: int) -> float:
    return ticks / NS_PER_MS


class SchedulingError(RuntimeError):
    """Raised when an event is scheduled before the current simulation time."""


class Simulator:
    """Priority-queue event scheduler with a simulated clock.

    Handlers are plain callables; ``schedule(time, kind, fn, *args)`` runs
    ``fn(*args)`` once the clock reaches ``time``.  Set ``trace`` to a list to
    record ``(time, seq, kind)`` for every executed event.
    """

    def __init__(self, trace: list | None = None):
        self.now = 0
        self._heap: list[tuple] = []
        self._seq = count()
        self._stopped = False
        self.trace = trace
        self.events_executed = 0

    def schedule(self, time: int, kind: str, fn: Callable[..., Any], *args: Any) -> int:
        if time < self.now:
            raise SchedulingError(
                f"cannot schedule {kind} at t={time}ns, clock is already at {self.now}ns"
            )
        seq = next(self._seq)
        heapq.heappush(self._heap, (time, seq, kind, fn, args))
        return seq

    def schedule_in(self, delay: int, kind: str, fn: Callable[..., Any], *args: Any) -> int:
        return self.schedule(self.now + delay, kind, fn, *args)

    def pending(self) -> int:
        return len(self._heap)

    def stop(self) -> None:
        self._stopped = True

    def run(self, until: int | None = None) -> int:
        """Execute events in (time, seq) order.

        Stops when the queue is empty, when ``stop()`` is called, or before the
        first event later than ``until``; in the last case the clock is
        advanced to ``until``.  Returns the final clock value.
        """
        heap = self._heap
        pop = heapq.heappop
        trace = self.trace
        executed = 0
        self._stopped = False
        while heap and not self._stopped:
            if until is not None and heap[0][0] > until:
                break
            time, seq, kind, fn, args = pop(heap)
            self.now = time
            if trace is not None:
                trace.append((time, seq, kind))
            fn(*args)
            executed += 1
        self.events_executed += executed
        if until is not None and self.now < until and not self._stopped:
            self.now = until
        return self.now
