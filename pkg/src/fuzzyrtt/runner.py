"""Run scenarios and write summary/series CSV files."""

from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass
from pathlib import Path

from .aqm import Aqm, CoDelAqm, FuzzyRttAqm, RedAqm, WindowedFlowCounter
from .engine import APP_START, APP_STOP, NS_PER_SEC, TIMER_FIRE, Simulator, millis, seconds
from .metrics import BIN, FlowStats, LinkMonitor, Summary, summarize
from .scenario import FlowGroup, Scenario
from .tcp import TcpFlow, TcpReceiver
from .topology import build_dumbbell

SUMMARY_COLUMNS = (
    "name", "aqm", "ecn", "bottleneck_mbps", "congestion", "n_flows", "rtt_spec", "seed",
    "duration_s", "warmup_s", "jain", "goodput_mbps", "utilization_mean", "utilization_std",
    "sojourn_mean_ms", "sojourn_std_ms", "loss_ratio", "drop_ratio", "mark_ratio",
)
SERIES_COLUMNS = (
    "time_s", "backlog_pkts", "sojourn_ms", "utilization", "arrivals", "drops", "marks",
    "active_flows", "p1", "p2", "p3", "p4", "p5",
)


@dataclass
class RunResult:
    scenario: Scenario
    summary: Summary
    series: list[tuple]
    flows: list[FlowStats]
    events: int

    def summary_row(self) -> list[str]:
        s, m = self.scenario, self.summary
        congestion = "+".join(g.size for g in s.groups) if s.groups else s.congestion
        return [
            s.name, s.aqm, str(int(s.ecn)), _fmt(s.bottleneck_bw / 1e6), congestion,
            str(len(self.flows)), s.rtt_spec, str(s.seed), _fmt(s.duration_s), _fmt(s.warmup),
            _fmt(m.jain), _fmt(m.goodput_mbps), _fmt(m.utilization_mean),
            _fmt(m.utilization_std), _fmt(m.sojourn_mean_ms), _fmt(m.sojourn_std_ms),
            _fmt(m.loss_ratio), _fmt(m.drop_ratio), _fmt(m.mark_ratio),
        ]

    def phase_loss(self, start_s: float, end_s: float) -> float:
        """Aggregate (drop + mark) ratio over a time span of the series."""
        rows = [r for r in self.series if start_s <= r[0] < end_s]
        arrivals = sum(r[4] for r in rows)
        return sum(r[5] + r[6] for r in rows) / arrivals if arrivals else 0.0


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return f"{x:.6f}"
    return str(x)


def make_aqm(s: Scenario, rng: random.Random, flow_count) -> Aqm:
    if s.aqm == "fuzzyrtt":
        if s.n_provider == "windowed":
            flow_count = WindowedFlowCounter(millis(s.n_window_ms))
        return FuzzyRttAqm(s.bottleneck_bw, rng=rng, flow_count=flow_count, mss=s.mss,
                           target_delay_ms=s.target_delay_ms, k0=s.k0,
                           category_rtts_ms=s.category_rtts_ms, alphas=s.alphas)
    if s.aqm == "red":
        target = s.qlen_target
        return RedAqm(s.red_min_th if s.red_min_th is not None else target / 2,
                      s.red_max_th if s.red_max_th is not None else 2 * target,
                      s.red_max_p, s.red_w_q, rng=rng)
    if s.aqm == "codel":
        return CoDelAqm(s.codel_target_ms, s.codel_interval_ms)
    return Aqm()


def run_scenario(s: Scenario, trace: list | None = None) -> RunResult:
    """Simulate ``s`` for its full duration and reduce it to records."""
    s.validate()
    plans = s.plan_flows()
    if not plans:
        raise ValueError("scenario has no flows")
    sim = Simulator(trace=trace)
    duration = seconds(s.duration_s)
    warmup = seconds(s.warmup) // BIN * BIN
    monitor = LinkMonitor(duration, len(plans))
    senders: list[TcpFlow] = []

    def active_flows() -> int:
        return sum(1 for f in senders if f.active)

    aqm = make_aqm(s, random.Random(f"{s.seed}:aqm"), active_flows)
    topo = build_dumbbell(sim, s.bottleneck_bw, [p.rtt_ms for p in plans], aqm,
                          s.bottleneck_delay_ms, s.mss, s.buffer_packets, s.access_bw, monitor)
    receivers = []
    for p in plans:
        snd = TcpFlow(sim, p.flow_id, p.rtt_ms, topo.send_data, ecn_capable=s.ecn, mss=s.mss)
        rcv = TcpReceiver(p.flow_id, s.mss)
        topo.attach(p.flow_id, snd, rcv)
        senders.append(snd)
        receivers.append(rcv)
        start = seconds(p.start_s)
        if start < duration:
            sim.schedule(start, APP_START, snd.start)
        if not math.isinf(p.stop_s) and seconds(p.stop_s) < duration:
            sim.schedule(seconds(p.stop_s), APP_STOP, snd.stop)

    snapshot: dict = {}

    def take_snapshot() -> None:
        snapshot["delivered"] = [r.bytes_delivered for r in receivers]
        snapshot["sent"] = [f.packets_sent for f in senders]
        snapshot["dropped"] = list(monitor.flow_dropped)
        snapshot["marked"] = list(monitor.flow_marked)

    sim.schedule(warmup, TIMER_FIRE, take_snapshot)

    samples: list[tuple] = []
    link = topo.bottleneck

    def sample() -> None:
        samples.append((len(link.backlog), aqm.probabilities(), active_flows()))
        if sim.now + BIN < duration:
            sim.schedule(sim.now + BIN, TIMER_FIRE, sample)

    sim.schedule(0, TIMER_FIRE, sample)
    sim.run(until=duration)
    monitor.on_backlog(duration, len(link.backlog))

    window_s = (duration - warmup) / NS_PER_SEC
    flows = []
    for p, snd, rcv in zip(plans, senders, receivers):
        i = p.flow_id
        delivered = rcv.bytes_delivered - snapshot["delivered"][i]
        flows.append(FlowStats(
            flow_id=i, rtt_ms=p.rtt_ms,
            packets_sent=snd.packets_sent - snapshot["sent"][i],
            packets_dropped=monitor.flow_dropped[i] - snapshot["dropped"][i],
            packets_marked=monitor.flow_marked[i] - snapshot["marked"][i],
            bytes_delivered=delivered,
            goodput=delivered * 8 / window_s,
        ))
    summary = summarize(monitor, flows, s.bottleneck_bw, warmup, duration)
    series = _series(monitor, samples)
    return RunResult(s, summary, series, flows, sim.events_executed)


def _series(monitor: LinkMonitor, samples: list[tuple]) -> list[tuple]:
    rows = []
    w = monitor.bin_width
    for b, (backlog, probs, active) in enumerate(samples):
        deps = monitor.departures[b]
        soj = monitor.sojourn_sum[b] / deps / 1e6 if deps else 0.0
        probs = probs if probs is not None else (math.nan,) * 5
        rows.append((b * w / NS_PER_SEC, backlog, soj, monitor.busy[b] / w,
                     monitor.arrivals[b], monitor.drops[b], monitor.marks[b], active,
                     *probs[:5]))
    return rows


TRANSIENT_GROUPS = [
    FlowGroup(0.0, math.inf, "light"),
    FlowGroup(40.0, 160.0, "medium"),
    FlowGroup(80.0, 120.0, "heavy"),
]
TRANSIENT_PHASES = [(0, 40, "light"), (40, 80, "medium"), (80, 120, "heavy"),
                    (120, 160, "medium"), (160, 200, "light")]


def transient_scenario(seed: int = 1, aqm: str = "fuzzyrtt", duration_s: float = 200.0,
                       bottleneck_bw: float = 50e6) -> Scenario:
    """The scripted three-group load change on a 50 Mbps bottleneck."""
    return Scenario(name=f"transient-{aqm}", bottleneck_bw=bottleneck_bw, aqm=aqm,
                    ecn=aqm != "codel", duration_s=duration_s, warmup_s=0.0, seed=seed,
                    groups=list(TRANSIENT_GROUPS))


def run_transient(seed: int = 1, aqm: str = "fuzzyrtt", **kw) -> RunResult:
    return run_scenario(transient_scenario(seed, aqm, **kw))


# -- CSV ------------------------------------------------------------------------

def summary_csv(results: list[RunResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for r in results:
        w.writerow(r.summary_row())
    return buf.getvalue()


def series_csv(result: RunResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SERIES_COLUMNS)
    for row in result.series:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def write_outputs(result: RunResult, out_dir: Path, summary: bool = True,
                  series: bool = True) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if summary:
        p = out_dir / f"{result.scenario.name}.summary.csv"
        p.write_text(summary_csv([result]))
        written.append(p)
    if series:
        p = out_dir / f"{result.scenario.name}.series.csv"
        p.write_text(series_csv(result))
        written.append(p)
    return written
