"""Per-flow and bottleneck statistics, Jain's index and run summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .engine import NS_PER_MS, NS_PER_SEC

BIN = 10 * NS_PER_MS
UTIL_WINDOW = NS_PER_SEC


def jain_index(throughputs: Sequence[float]) -> float:
    """(sum x)^2 / (n * sum x^2); 1 for equal shares, 1/n when one flow takes all."""
    xs = [float(x) for x in throughputs]
    if not xs:
        raise ValueError("Jain's index of an empty set is undefined")
    if any(x < 0 or not math.isfinite(x) for x in xs):
        raise ValueError("throughputs must be finite and non-negative")
    sq = math.fsum(x * x for x in xs)
    if sq == 0.0:
        raise ValueError("Jain's index is undefined when every throughput is zero")
    total = math.fsum(xs)
    return min(1.0, total * total / (len(xs) * sq))


@dataclass
class FlowStats:
    flow_id: int
    rtt_ms: float
    packets_sent: int = 0
    packets_dropped: int = 0
    packets_marked: int = 0
    bytes_delivered: int = 0
    goodput: float = 0.0


class LinkMonitor:
    """Accumulates bottleneck activity into fixed 10 ms bins.

    Busy time and backlog area are split exactly across bin boundaries, so
    utilization over any whole number of bins never exceeds one.
    """

    def __init__(self, duration: int, n_flows: int, bin_width: int = BIN):
        self.bin_width = bin_width
        self.n_bins = -(-duration // bin_width)
        n = self.n_bins + 1
        self.busy = [0] * n
        self.arrivals = [0] * n
        self.drops = [0] * n
        self.marks = [0] * n
        self.departures = [0] * n
        self.sojourn_sum = [0.0] * n
        self.sojourn_sq = [0.0] * n
        self.backlog_area = [0.0] * n
        self.flow_dropped = [0] * n_flows
        self.flow_marked = [0] * n_flows
        self._last_change = 0

    def _spread(self, series: list, start: int, end: int, weight: float = 1.0) -> None:
        w = self.bin_width
        last = self.n_bins
        while start < end:
            b = start // w
            if b > last:
                return
            stop = (b + 1) * w
            if stop > end:
                stop = end
            series[b] += (stop - start) * weight
            start = stop

    def on_arrival(self, pkt, outcome: str, now: int) -> None:
        b = now // self.bin_width
        self.arrivals[b] += 1
        if outcome == "dropped":
            self.drops[b] += 1
            self.flow_dropped[pkt.flow_id] += 1
        elif outcome == "admitted-marked":
            self.marks[b] += 1
            self.flow_marked[pkt.flow_id] += 1

    def on_head_drop(self, pkt, now: int) -> None:
        self.drops[now // self.bin_width] += 1
        self.flow_dropped[pkt.flow_id] += 1

    def on_backlog(self, now: int, backlog_before: int) -> None:
        if backlog_before:
            self._spread(self.backlog_area, self._last_change, now, backlog_before)
        self._last_change = now

    def on_service(self, pkt, start: int, end: int, sojourn: int) -> None:
        b = start // self.bin_width
        self.departures[b] += 1
        self.sojourn_sum[b] += sojourn
        self.sojourn_sq[b] += float(sojourn) * sojourn
        self._spread(self.busy, start, end)

    def window(self, start: int, end: int) -> range:
        return range(start // self.bin_width, end // self.bin_width)


@dataclass
class Summary:
    """One row of the summary CSV."""

    jain: float
    goodput_mbps: float
    utilization_mean: float
    utilization_std: float
    sojourn_mean_ms: float
    sojourn_std_ms: float
    loss_ratio: float
    drop_ratio: float
    mark_ratio: float
    mean_backlog: float
    departure_rate: float
    flows: list[FlowStats] = field(default_factory=list)


def summarize(monitor: LinkMonitor, flows: Sequence[FlowStats], bandwidth: float,
              warmup: int, end: int) -> Summary:
    """Reduce a finished run to its summary over the window [warmup, end].

    ``flows`` must already carry per-window goodputs.  Utilization statistics
    are taken over one-second sub-windows.
    """
    if not 0 <= warmup < end:
        raise ValueError("measurement window is empty: warmup must be below the duration")
    bins = monitor.window(warmup, end)
    width = (bins.stop - bins.start) * monitor.bin_width
    busy = sum(monitor.busy[b] for b in bins)
    per = UTIL_WINDOW // monitor.bin_width
    utils = []
    for s in range(bins.start, bins.stop - per + 1, per):
        utils.append(sum(monitor.busy[s:s + per]) / UTIL_WINDOW)
    if utils:
        u_mean = math.fsum(utils) / len(utils)
        u_std = math.sqrt(math.fsum((u - u_mean) ** 2 for u in utils) / len(utils))
    else:
        u_mean, u_std = busy / width, 0.0

    deps = sum(monitor.departures[b] for b in bins)
    s_sum = math.fsum(monitor.sojourn_sum[b] for b in bins)
    s_sq = math.fsum(monitor.sojourn_sq[b] for b in bins)
    if deps:
        s_mean = s_sum / deps
        s_std = math.sqrt(max(0.0, s_sq / deps - s_mean * s_mean))
    else:
        s_mean = s_std = 0.0
    arrivals = sum(monitor.arrivals[b] for b in bins)
    drops = sum(monitor.drops[b] for b in bins)
    marks = sum(monitor.marks[b] for b in bins)
    area = math.fsum(monitor.backlog_area[b] for b in bins)

    goodputs = [f.goodput for f in flows]
    try:
        jain = jain_index(goodputs)
    except ValueError:
        jain = float("nan")
    return Summary(
        jain=jain,
        goodput_mbps=sum(goodputs) / 1e6,
        utilization_mean=min(1.0, busy / width) if not utils else u_mean,
        utilization_std=u_std,
        sojourn_mean_ms=s_mean / NS_PER_MS,
        sojourn_std_ms=s_std / NS_PER_MS,
        loss_ratio=(drops + marks) / arrivals if arrivals else 0.0,
        drop_ratio=drops / arrivals if arrivals else 0.0,
        mark_ratio=marks / arrivals if arrivals else 0.0,
        mean_backlog=area / width,
        departure_rate=deps / (width / NS_PER_SEC),
        flows=list(flows),
    )
