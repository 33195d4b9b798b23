"""TCP New-Reno bulk sender and immediate-ack receiver with ECN.

Sequence numbers count whole segments.  Every data packet carries the
sender's smoothed RTT in milliseconds as its RTT annotation.
"""

from __future__ import annotations

import enum
import math

from .engine import NS_PER_MS, NS_PER_SEC, TIMER_FIRE, Simulator, millis
from .topology import ACK_BYTES, MSS, MTU, Packet

MIN_RTO = 200 * NS_PER_MS
MAX_RTO = 60 * NS_PER_SEC
INITIAL_RTO = NS_PER_SEC
INITIAL_CWND_SEGMENTS = 2


class TcpModelError(RuntimeError):
    """The simulated peer acknowledged data that was never sent."""


class State(enum.Enum):
    SLOW_START = "slow-start"
    CONGESTION_AVOIDANCE = "congestion-avoidance"
    FAST_RECOVERY = "fast-recovery"


class TcpFlow:
    """New-Reno sender driven by a long-lived FTP source.

    ``transmit(pkt)`` hands a packet to the network.  Window reductions
    (three duplicate acks or ECN echo) happen at most once per smoothed RTT;
    congestion signals arriving sooner after ``last_reduction_time`` are
    absorbed.  Timeouts always collapse the window.
    """

    def __init__(self, sim: Simulator, flow_id: int, base_rtt_ms: float, transmit,
                 ecn_capable: bool = True, mss: int = MSS):
        self.sim = sim
        self.flow_id = flow_id
        self.base_rtt_ms = base_rtt_ms
        self.transmit = transmit
        self.ecn_capable = ecn_capable
        self.mss = mss
        self.state = State.SLOW_START
        self.cwnd = float(INITIAL_CWND_SEGMENTS * mss)
        self.ssthresh = math.inf
        self.srtt: float | None = None
        self.rttvar = 0.0
        self.rto = max(INITIAL_RTO, 2 * millis(base_rtt_ms))
        self.last_reduction_time: float = -math.inf
        self.dup_ack_count = 0
        self.snd_una = 0
        self.snd_nxt = 0
        self.high_sent = 0
        self.recover = -1
        self.active = False
        self._cwr_pending = False
        self._partial_acks = 0
        self._timer_deadline: int | None = None
        self._timer_token = 0
        self._timer_armed_at: int | None = None
        self.packets_sent = 0
        self.retransmissions = 0
        self.reductions: list[int] = []
        self.timeouts = 0

    # -- application -------------------------------------------------------

    def start(self) -> None:
        self.active = True
        self.send_available()

    def stop(self) -> None:
        self.active = False

    # -- helpers -----------------------------------------------------------

    @property
    def flight_bytes(self) -> int:
        return (self.snd_nxt - self.snd_una) * self.mss

    @property
    def rtt_annotation(self) -> float:
        if self.srtt is None:
            return self.base_rtt_ms
        return self.srtt / NS_PER_MS

    def _reduction_allowed(self, now: int) -> bool:
        window = self.srtt if self.srtt is not None else millis(self.base_rtt_ms)
        return now - self.last_reduction_time >= window

    def _halve(self, now: int) -> None:
        self.ssthresh = max(self.cwnd / 2, 2.0 * self.mss)
        self.cwnd = self.ssthresh
        self.last_reduction_time = now
        self.reductions.append(now)

    def _sample_rtt(self, sample: int) -> None:
        if self.srtt is None:
            self.srtt = float(sample)
            self.rttvar = sample / 2
        else:
            self.rttvar = 0.75 * self.rttvar + 0.25 * abs(self.srtt - sample)
            self.srtt = 0.875 * self.srtt + 0.125 * sample
        self.rto = min(MAX_RTO, max(MIN_RTO, round(self.srtt + 4 * self.rttvar)))

    # -- sending -----------------------------------------------------------

    def emit_packet(self, now: int) -> Packet:
        """Build the next segment (a retransmission when below ``high_sent``)."""
        seq = self.snd_nxt
        pkt = Packet(self.flow_id, seq, MTU, False, self.ecn_capable, self.rtt_annotation)
        pkt.sent_at = now
        if seq < self.high_sent:
            pkt.retransmit = True
            self.retransmissions += 1
        else:
            self.high_sent = seq + 1
        if self._cwr_pending and self.ecn_capable:
            pkt.cwr = True
            self._cwr_pending = False
        self.snd_nxt = seq + 1
        self.packets_sent += 1
        return pkt

    def send_available(self) -> None:
        if not self.active and self.snd_nxt >= self.high_sent:
            return
        now = self.sim.now
        sent = False
        while (self.snd_nxt - self.snd_una) * self.mss < self.cwnd:
            if not self.active and self.snd_nxt >= self.high_sent:
                break
            self.transmit(self.emit_packet(now))
            sent = True
        if sent and self._timer_deadline is None:
            self._arm_timer(now)

    def _retransmit_head(self, now: int) -> None:
        seq = self.snd_una
        pkt = Packet(self.flow_id, seq, MTU, False, self.ecn_capable, self.rtt_annotation)
        pkt.sent_at = now
        pkt.retransmit = True
        self.retransmissions += 1
        self.packets_sent += 1
        if self.snd_nxt <= seq:
            self.snd_nxt = seq + 1
        self.transmit(pkt)

    # -- retransmission timer ---------------------------------------------

    def _arm_timer(self, now: int) -> None:
        deadline = now + self.rto
        self._timer_deadline = deadline
        if self._timer_armed_at is None or self._timer_armed_at > deadline:
            self._timer_token += 1
            self._timer_armed_at = deadline
            self.sim.schedule(deadline, TIMER_FIRE, self._timer_fired, self._timer_token)

    def _cancel_timer(self) -> None:
        self._timer_deadline = None

    def _timer_fired(self, token: int) -> None:
        if token != self._timer_token:
            return
        self._timer_armed_at = None
        deadline = self._timer_deadline
        if deadline is None:
            return
        now = self.sim.now
        if now < deadline:
            self._timer_token += 1
            self._timer_armed_at = deadline
            self.sim.schedule(deadline, TIMER_FIRE, self._timer_fired, self._timer_token)
            return
        self._timer_deadline = None
        self.on_timeout(now)

    def on_timeout(self, now: int) -> None:
        if self.snd_una >= self.high_sent:
            self._cancel_timer()
            return
        self.timeouts += 1
        self.ssthresh = max(self.cwnd / 2, 2.0 * self.mss)
        self.cwnd = float(self.mss)
        self.state = State.SLOW_START
        self.last_reduction_time = now
        self.rto = min(MAX_RTO, 2 * self.rto)
        self.dup_ack_count = 0
        self.recover = self.high_sent - 1
        self.snd_nxt = self.snd_una
        self._arm_timer(now)
        self.send_available()

    # -- acks ----------------------------------------------------------------

    def on_ack(self, ack: Packet) -> None:
        now = self.sim.now
        ack_no = ack.ack_no
        if ack_no > self.high_sent:
            raise TcpModelError(
                f"flow {self.flow_id}: ack {ack_no} beyond highest sent {self.high_sent}")
        mss = self.mss
        if ack_no > self.snd_una:
            newly = ack_no - self.snd_una
            self.snd_una = ack_no
            if self.snd_nxt < ack_no:
                self.snd_nxt = ack_no
            if not ack.echo_retransmit:
                self._sample_rtt(now - ack.echo_sent_at)
            if self.state is State.FAST_RECOVERY:
                if ack_no > self.recover:
                    self.cwnd = self.ssthresh
                    self.state = State.CONGESTION_AVOIDANCE
                    self.dup_ack_count = 0
                else:
                    # partial ack: next hole is lost too.  Only the first one
                    # re-arms the timer, so a long loss run falls back to RTO.
                    self.cwnd = max(float(mss), self.cwnd - newly * mss + mss)
                    self._retransmit_head(now)
                    if self._partial_acks == 0:
                        self._arm_timer(now)
                    self._partial_acks += 1
                    self.send_available()
                    return
            else:
                self.dup_ack_count = 0
                if self.cwnd < self.ssthresh:
                    self.cwnd += mss
                else:
                    self.cwnd += mss * mss / self.cwnd
                self.state = (State.SLOW_START if self.cwnd < self.ssthresh
                              else State.CONGESTION_AVOIDANCE)
            if self.snd_una < self.high_sent:
                self._arm_timer(now)
            else:
                self._cancel_timer()
        elif ack_no == self.snd_una and self.snd_una < self.high_sent:
            if self.state is State.FAST_RECOVERY:
                self.cwnd += mss
            else:
                self.dup_ack_count += 1
                if self.dup_ack_count == 3 and ack_no > self.recover:
                    self._enter_fast_recovery(now)
        if ack.ece and self.state is not State.FAST_RECOVERY:
            self.on_ecn_echo(now)
        self.send_available()

    def _enter_fast_recovery(self, now: int) -> None:
        if self._reduction_allowed(now):
            self._halve(now)
        else:
            # already reduced within this RTT: keep the window
            self.ssthresh = max(self.cwnd, 2.0 * self.mss)
        self.state = State.FAST_RECOVERY
        self._partial_acks = 0
        self.recover = self.high_sent - 1
        self._retransmit_head(now)
        self._arm_timer(now)

    def on_ecn_echo(self, now: int) -> None:
        if not self._reduction_allowed(now):
            return
        self._halve(now)
        self._cwr_pending = True
        self.state = State.CONGESTION_AVOIDANCE


class TcpReceiver:
    """Cumulative-ack receiver that acks every segment immediately."""

    def __init__(self, flow_id: int, mss: int = MSS):
        self.flow_id = flow_id
        self.mss = mss
        self.rcv_nxt = 0
        self._out_of_order: set[int] = set()
        self._ece = False
        self.bytes_delivered = 0
        self.packets_received = 0

    def on_data(self, pkt: Packet, now: int) -> Packet:
        self.packets_received += 1
        if pkt.cwr:
            self._ece = False
        if pkt.ecn_marked:
            self._ece = True
        seq = pkt.seq_no
        if seq == self.rcv_nxt:
            nxt = seq + 1
            ooo = self._out_of_order
            while nxt in ooo:
                ooo.remove(nxt)
                nxt += 1
            self.bytes_delivered += (nxt - self.rcv_nxt) * self.mss
            self.rcv_nxt = nxt
        elif seq > self.rcv_nxt:
            self._out_of_order.add(seq)
        ack = Packet(self.flow_id, seq, ACK_BYTES, True)
        ack.ack_no = self.rcv_nxt
        ack.ece = self._ece
        ack.echo_sent_at = pkt.sent_at
        ack.echo_retransmit = pkt.retransmit
        return ack
