"""CoDel (drop-only), evaluated at dequeue time."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..engine import NS_PER_MS
from .base import Aqm, Verdict


@dataclass
class CoDelState:
    target: int = 5 * NS_PER_MS
    interval: int = 100 * NS_PER_MS
    mtu: int = 576
    dropping: bool = False
    drop_next: int = 0
    drop_count: int = 0
    last_count: int = 0
    first_above_time: int | None = None

    def control_law(self, t: int) -> int:
        return t + round(self.interval / math.sqrt(self.drop_count))

    def _ok_to_drop(self, sojourn: int, now: int, queue_bytes: int) -> bool:
        if sojourn < self.target or queue_bytes <= self.mtu:
            self.first_above_time = None
            return False
        if self.first_above_time is None:
            self.first_above_time = now + self.interval
            return False
        return now >= self.first_above_time

    def reset_idle(self) -> None:
        self.first_above_time = None
        self.dropping = False


def codel_verdict(state: CoDelState, sojourn: int, now: int,
                  queue_bytes: int = 1 << 62) -> Verdict:
    """One step of the CoDel state machine for the packet at the head.

    ``queue_bytes`` is what remains queued behind it; a queue holding at most
    one MTU is never dropped from.  Never returns ``Verdict.MARK``.
    """
    ok = state._ok_to_drop(sojourn, now, queue_bytes)
    if state.dropping:
        if not ok:
            state.dropping = False
            return Verdict.FORWARD
        if now >= state.drop_next:
            state.drop_count += 1
            state.drop_next = state.control_law(state.drop_next)
            return Verdict.DROP
        return Verdict.FORWARD
    if ok:
        state.dropping = True
        delta = state.drop_count - state.last_count
        if delta > 1 and now - state.drop_next < 16 * state.interval:
            state.drop_count = delta
        else:
            state.drop_count = 1
        state.drop_next = state.control_law(now)
        state.last_count = state.drop_count
        return Verdict.DROP
    return Verdict.FORWARD


class CoDelAqm(Aqm):
    name = "codel"

    def __init__(self, target_ms: float = 5.0, interval_ms: float = 100.0, mtu: int = 576):
        self.state = CoDelState(round(target_ms * NS_PER_MS), round(interval_ms * NS_PER_MS), mtu)

    def on_dequeue(self, pkt, sojourn: int, now: int) -> Verdict:
        return codel_verdict(self.state, sojourn, now, self.link.byte_count)

    def on_empty(self, now: int) -> None:
        self.state.reset_idle()
