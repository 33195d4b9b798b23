"""Classic (non-gentle) RED with ECN marking."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .base import Aqm, Verdict


@dataclass
class RedState:
    min_th: float
    max_th: float
    max_p: float = 0.1
    w_q: float = 0.002
    avg: float = 0.0
    count: int = -1
    idle_since: int | None = 0

    def __post_init__(self):
        if not self.min_th < self.max_th:
            raise ValueError("RED needs min_th < max_th")
        if not 0.0 < self.max_p <= 1.0:
            raise ValueError("max_p must lie in (0, 1]")

    def update_average(self, backlog: int, now: int, packet_time: int,
                       idle: bool = False) -> float:
        if idle and self.idle_since is not None:
            # decay as if m empty-queue arrivals happened while idle
            m = (now - self.idle_since) / packet_time if packet_time > 0 else 0.0
            self.avg *= (1.0 - self.w_q) ** m
            # if this packet is dropped the link stays idle from now on
            self.idle_since = now
        else:
            self.avg += self.w_q * (backlog - self.avg)
        return self.avg

    def base_probability(self) -> float:
        return self.max_p * (self.avg - self.min_th) / (self.max_th - self.min_th)


def red_verdict(state: RedState, backlog: int, ecn_capable: bool, rng: random.Random,
                now: int = 0, packet_time: int = 0, idle: bool = False) -> Verdict:
    """RED decision for one arriving packet.

    ``idle`` means the link had nothing to send when the packet arrived, in
    which case the average decays for the idle time.
    """
    avg = state.update_average(backlog, now, packet_time, idle)
    if avg < state.min_th:
        state.count = -1
        return Verdict.FORWARD
    if avg > state.max_th:
        state.count = 0
        return Verdict.DROP
    state.count += 1
    pb = state.base_probability()
    pa = 1.0 if state.count * pb >= 1.0 else pb / (1.0 - state.count * pb)
    if rng.random() < pa:
        state.count = 0
        return Verdict.MARK if ecn_capable else Verdict.DROP
    return Verdict.FORWARD


class RedAqm(Aqm):
    name = "red"

    def __init__(self, min_th: float, max_th: float, max_p: float = 0.1, w_q: float = 0.002,
                 rng: random.Random | None = None):
        self.state = RedState(min_th, max_th, max_p, w_q)
        self.rng = rng or random.Random(0)
        self._packet_time = 0

    def attach(self, sim, link) -> None:
        super().attach(sim, link)
        self._packet_time = link.serialization(576)

    def on_enqueue(self, pkt, backlog: int, now: int) -> Verdict:
        return red_verdict(self.state, backlog, pkt.ecn_capable, self.rng, now,
                           self._packet_time, idle=not self.link.busy and backlog == 0)

    def on_empty(self, now: int) -> None:
        self.state.idle_since = now
