"""Packets, links, FIFO queues and the dumbbell topology."""

from __future__ import annotations

import math
from collections import deque
from typing import Callable, Sequence

from .aqm.base import Aqm, Verdict
from .engine import NS_PER_SEC, PACKET_ARRIVAL, PACKET_DEPARTURE, Simulator, millis

MSS = 536
HEADER_BYTES = 40
MTU = MSS + HEADER_BYTES
ACK_BYTES = 40

ADMITTED = "admitted"
ADMITTED_MARKED = "admitted-marked"
DROPPED = "dropped"


class Packet:
    """A simulated datagram.

    ``rtt_annotation`` (ms) carries the sender's current RTT estimate, the
    way an endpoint would publish it in an IP option.
    """

    __slots__ = ("flow_id", "seq_no", "size", "is_ack", "ecn_capable", "ecn_marked",
                 "rtt_annotation", "enqueue_time", "sent_at", "retransmit", "cwr",
                 "ece", "ack_no", "echo_sent_at", "echo_retransmit")

    def __init__(self, flow_id: int, seq_no: int, size: int = MTU, is_ack: bool = False,
                 ecn_capable: bool = False, rtt_annotation: float = 0.0):
        self.flow_id = flow_id
        self.seq_no = seq_no
        self.size = size
        self.is_ack = is_ack
        self.ecn_capable = ecn_capable
        self.ecn_marked = False
        self.rtt_annotation = rtt_annotation
        self.enqueue_time = -1
        self.sent_at = 0
        self.retransmit = False
        self.cwr = False
        self.ece = False
        self.ack_no = 0
        self.echo_sent_at = 0
        self.echo_retransmit = False

    def __repr__(self):
        kind = "ack" if self.is_ack else "data"
        return f"Packet({kind} flow={self.flow_id} seq={self.seq_no})"


def serialization_time(size_bytes: int, bandwidth: float) -> int:
    return round(size_bytes * 8 * NS_PER_SEC / bandwidth)


class Link:
    """Output port: a bounded FIFO waiting room feeding a serializing wire.

    ``backlog`` counts packets waiting, excluding the one being transmitted.
    ``deliver(pkt, t)`` is invoked when the last bit of ``pkt`` has left the
    wire; ``t`` is its arrival time at the far end.
    """

    def __init__(self, sim: Simulator, bandwidth: float, propagation_delay: int,
                 capacity: int, aqm: Aqm | None = None,
                 deliver: Callable[[Packet, int], None] | None = None, monitor=None):
        if bandwidth <= 0:
            raise ValueError("link bandwidth must be positive")
        if capacity < 1:
            raise ValueError("queue capacity must be at least one packet")
        self.sim = sim
        self.bandwidth = bandwidth
        self.propagation_delay = propagation_delay
        self.capacity = capacity
        self.aqm = aqm if aqm is not None else Aqm()
        self.deliver = deliver
        self.monitor = monitor
        self.on_drop: Callable[[Packet], None] | None = None
        self.backlog: deque[Packet] = deque()
        self.byte_count = 0
        self.busy = False
        self._ser_cache: dict[int, int] = {}
        self.aqm.attach(sim, self)

    def serialization(self, size: int) -> int:
        t = self._ser_cache.get(size)
        if t is None:
            t = self._ser_cache[size] = serialization_time(size, self.bandwidth)
        return t

    def enqueue(self, pkt: Packet) -> str:
        now = self.sim.now
        backlog = self.backlog
        aqm = self.aqm
        verdict = aqm.on_enqueue(pkt, len(backlog), now)
        if len(backlog) >= self.capacity:
            outcome = DROPPED
        elif verdict is Verdict.FORWARD:
            outcome = ADMITTED
        elif verdict is Verdict.MARK and pkt.ecn_capable:
            pkt.ecn_marked = True
            outcome = ADMITTED_MARKED
        else:
            outcome = DROPPED
        monitor = self.monitor
        if monitor is not None:
            monitor.on_arrival(pkt, outcome, now)
        if outcome is DROPPED:
            if self.on_drop is not None:
                self.on_drop(pkt)
            return outcome
        if monitor is not None:
            monitor.on_backlog(now, len(backlog))
        pkt.enqueue_time = now
        backlog.append(pkt)
        self.byte_count += pkt.size
        if aqm.wants_samples:
            aqm.sample(len(backlog))
        if not self.busy:
            self._start_next()
        return outcome

    def _start_next(self) -> None:
        now = self.sim.now
        backlog = self.backlog
        aqm = self.aqm
        monitor = self.monitor
        while backlog:
            pkt = backlog.popleft()
            self.byte_count -= pkt.size
            if monitor is not None:
                monitor.on_backlog(now, len(backlog) + 1)
            if aqm.wants_samples:
                aqm.sample(len(backlog))
            sojourn = now - pkt.enqueue_time
            if aqm.on_dequeue(pkt, sojourn, now) is Verdict.DROP:
                if monitor is not None:
                    monitor.on_head_drop(pkt, now)
                if self.on_drop is not None:
                    self.on_drop(pkt)
                continue
            ser = self.serialization(pkt.size)
            if monitor is not None:
                monitor.on_service(pkt, now, now + ser, sojourn)
            self.busy = True
            self.sim.schedule(now + ser, PACKET_DEPARTURE, self._depart, pkt)
            return
        self.busy = False
        aqm.on_empty(now)

    def _depart(self, pkt: Packet) -> None:
        self.busy = False
        if self.deliver is not None:
            self.deliver(pkt, self.sim.now + self.propagation_delay)
        self._start_next()


class Topology:
    """Dumbbell: n senders -> left router -> bottleneck -> right router -> n receivers.

    Access links run at ``access_bw`` and never congest; they are modelled as
    per-flow FIFO wires (serialization plus propagation).  Acks return over an
    uncongested reverse path as pure delay.
    """

    def __init__(self, sim: Simulator, bottleneck: Link, access_bw: float,
                 access_delays: Sequence[int], flow_rtts_ms: Sequence[float]):
        self.sim = sim
        self.bottleneck = bottleneck
        self.access_bw = access_bw
        self.access_delays = list(access_delays)
        self.flow_rtts_ms = list(flow_rtts_ms)
        n = len(self.access_delays)
        self._left_free = [0] * n
        self._right_free = [0] * n
        self._data_ser = serialization_time(MTU, access_bw)
        self._ack_ser = serialization_time(ACK_BYTES, access_bw)
        # reverse path: right access, reverse bottleneck, left access
        self.ack_delay = [
            2 * self._ack_ser + serialization_time(ACK_BYTES, bottleneck.bandwidth)
            + bottleneck.propagation_delay + d
            for d in self.access_delays
        ]
        self.receivers: list = [None] * n
        self.senders: list = [None] * n
        bottleneck.deliver = self._from_bottleneck
        bottleneck.on_drop = self._dropped
        self.in_network = [0] * n

    @property
    def n_flows(self) -> int:
        return len(self.access_delays)

    def attach(self, flow_id: int, sender, receiver) -> None:
        self.senders[flow_id] = sender
        self.receivers[flow_id] = receiver

    def send_data(self, pkt: Packet) -> None:
        f = pkt.flow_id
        now = self.sim.now
        start = self._left_free[f]
        if start < now:
            start = now
        done = start + (self._data_ser if pkt.size == MTU else serialization_time(pkt.size, self.access_bw))
        self._left_free[f] = done
        self.in_network[f] += 1
        self.sim.schedule(done + self.access_delays[f], PACKET_ARRIVAL, self._at_bottleneck, pkt)

    def _at_bottleneck(self, pkt: Packet) -> None:
        self.bottleneck.enqueue(pkt)

    def _dropped(self, pkt: Packet) -> None:
        self.in_network[pkt.flow_id] -= 1

    def _from_bottleneck(self, pkt: Packet, t: int) -> None:
        f = pkt.flow_id
        start = self._right_free[f]
        if start < t:
            start = t
        done = start + self._data_ser
        self._right_free[f] = done
        self.sim.schedule(done, PACKET_ARRIVAL, self._at_receiver, pkt)

    def _at_receiver(self, pkt: Packet) -> None:
        f = pkt.flow_id
        self.in_network[f] -= 1
        ack = self.receivers[f].on_data(pkt, self.sim.now)
        self.sim.schedule(self.sim.now + self.ack_delay[f], PACKET_ARRIVAL,
                          self.senders[f].on_ack, ack)


def bdp_packets(bandwidth: float, rtt_ms: float, mss: int = MSS) -> int:
    """Bandwidth-delay product in MSS-sized packets, rounded down."""
    return math.floor(bandwidth * rtt_ms / 1000.0 / (8 * mss) + 1e-9)


def access_delay_ms(rtt_ms: float, bottleneck_delay_ms: float) -> float:
    """One-way access delay giving a round-trip propagation time of ``rtt_ms``."""
    if rtt_ms < 2 * bottleneck_delay_ms:
        raise ValueError(
            f"flow RTT {rtt_ms} ms is smaller than twice the bottleneck delay "
            f"({bottleneck_delay_ms} ms)")
    return (rtt_ms - 2 * bottleneck_delay_ms) / 2


def build_dumbbell(sim: Simulator, bottleneck_bw: float, flow_rtts_ms: Sequence[float],
                   aqm: Aqm | None = None, bottleneck_delay_ms: float = 1.0,
                   mss: int = MSS, capacity: int | None = None,
                   access_bw: float | None = None, monitor=None) -> Topology:
    """Build the dumbbell for the given per-flow round-trip propagation times.

    The bottleneck buffer defaults to the bandwidth-delay product at the mean
    configured flow RTT.  Access links default to ten times the bottleneck rate.
    """
    if not flow_rtts_ms:
        raise ValueError("a dumbbell needs at least one flow")
    if bottleneck_bw <= 0:
        raise ValueError("bottleneck bandwidth must be positive")
    delays = [millis(access_delay_ms(r, bottleneck_delay_ms)) for r in flow_rtts_ms]
    if capacity is None:
        mean_rtt = sum(flow_rtts_ms) / len(flow_rtts_ms)
        capacity = max(1, bdp_packets(bottleneck_bw, mean_rtt, mss))
    link = Link(sim, bottleneck_bw, millis(bottleneck_delay_ms), capacity, aqm,
                monitor=monitor)
    return Topology(sim, link, access_bw or 10 * bottleneck_bw, delays, flow_rtts_ms)
