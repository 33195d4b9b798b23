"""RTT-aware fuzzy queue manager.

Five category controllers, one per RTT band, each run the same fuzzy
PI-style controller at a period equal to the band's RTT.  A packet's drop
probability is blended from the two categories surrounding its RTT
annotation.  No per-flow state is kept.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Sequence

from ..engine import NS_PER_MS, TIMER_FIRE, millis
from ..flc import MisoFlc
from .base import Aqm, Verdict

CATEGORY_RTTS_MS = (40.0, 80.0, 160.0, 320.0, 640.0)
OUTPUT_MULTIPLIERS = (1, 2, 4, 8, 16)
ALPHAS = (0.0, 0.002, 0.004, 0.012, 0.024)
DEFAULT_K0 = 1e-3


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else (hi if x > hi else x)


@dataclass
class CategoryController:
    index: int
    rtt_ms: float
    interval: int
    output_multiplier: float
    alpha: float
    p: float = 0.0
    qlen_min: int = 0
    prev_error: float | None = None
    updates: int = 0


def blend_weights(rtt_ms: float, category_rtts: Sequence[float]) -> tuple[int, float, float]:
    """Locate ``rtt_ms`` between two category RTTs.

    Returns ``(i, w_i, w_next)`` where ``i`` is the 0-based lower category.
    RTTs at or below the first category map entirely onto it, RTTs at or
    above the last onto the last.
    """
    last = len(category_rtts) - 1
    if rtt_ms <= category_rtts[0]:
        return 0, 1.0, 0.0
    if rtt_ms >= category_rtts[last]:
        return last - 1, 0.0, 1.0
    i = 0
    while rtt_ms > category_rtts[i + 1]:
        i += 1
    lo, hi = category_rtts[i], category_rtts[i + 1]
    w_lo = 1.0 - (rtt_ms - lo) / (hi - lo)
    w_hi = 1.0 - (hi - rtt_ms) / (hi - lo)
    return i, w_lo, w_hi


class WindowedFlowCounter:
    """Estimate N as the number of distinct flows seen in the last ``window`` ns.

    Feed it with ``observe``; calling it returns the current estimate.  Used
    when the true active-flow count is not available to the router.
    """

    def __init__(self, window: int):
        if window <= 0:
            raise ValueError("window must be positive")
        self.window = window
        self._last_seen: dict[int, int] = {}
        self._now = 0

    def observe(self, flow_id: int, now: int) -> None:
        self._last_seen[flow_id] = now
        self._now = now

    def __call__(self) -> int:
        horizon = self._now - self.window
        stale = [f for f, t in self._last_seen.items() if t < horizon]
        for f in stale:
            del self._last_seen[f]
        return len(self._last_seen)


class FuzzyRttAqm(Aqm):
    """Drop/mark controller with per-RTT-band probabilities.

    ``flow_count`` returns the number of active flows N; the controller
    output is scaled by ``k0 * ln(N)`` and by the category's multiplier.
    """

    name = "fuzzyrtt"
    wants_samples = True

    def __init__(self, capacity_bps: float, rng: random.Random | None = None,
                 flow_count: Callable[[], int] = lambda: 1, mss: int = 536,
                 target_delay_ms: float = 10.0, k0: float = DEFAULT_K0,
                 category_rtts_ms: Sequence[float] = CATEGORY_RTTS_MS,
                 alphas: Sequence[float] = ALPHAS,
                 multipliers: Sequence[float] = OUTPUT_MULTIPLIERS,
                 qlen_target: float | None = None, flc: MisoFlc | None = None):
        if capacity_bps <= 0:
            raise ValueError("capacity must be positive")
        if not (len(category_rtts_ms) == len(alphas) == len(multipliers)):
            raise ValueError("category RTTs, alphas and multipliers must have equal length")
        if any(b <= a for a, b in zip(category_rtts_ms, category_rtts_ms[1:])):
            raise ValueError("category RTTs must be strictly increasing")
        self.capacity_bps = capacity_bps
        self.mss = mss
        self.qlen_target = (qlen_target if qlen_target is not None
                            else capacity_bps * target_delay_ms / 1000.0 / (8 * mss))
        if self.qlen_target <= 0:
            raise ValueError("queue target must be positive")
        self.sf_i1 = 1.0 / self.qlen_target
        self.sf_i2 = 800.0 * mss / capacity_bps
        self.k0 = k0
        self.flc = flc or MisoFlc()
        self.rng = rng or random.Random(0)
        self.flow_count = flow_count
        self.category_rtts = tuple(float(r) for r in category_rtts_ms)
        self.categories = [
            CategoryController(i + 1, r, millis(r), m, a)
            for i, (r, m, a) in enumerate(zip(self.category_rtts, multipliers, alphas))
        ]
        self._backlog = 0

    # -- timers --------------------------------------------------------------

    def attach(self, sim, link) -> None:
        super().attach(sim, link)
        for cat in self.categories:
            sim.schedule(sim.now + cat.interval, TIMER_FIRE, self._tick, cat)

    def _tick(self, cat: CategoryController) -> None:
        self.update_category(cat)
        self.sim.schedule(self.sim.now + cat.interval, TIMER_FIRE, self._tick, cat)

    # -- queue management ------------------------------------------------------

    def sample(self, backlog: int) -> None:
        self._backlog = backlog
        for cat in self.categories:
            if backlog < cat.qlen_min:
                cat.qlen_min = backlog

    sample_queue = sample

    def control_step(self, cat: CategoryController) -> float:
        """Fuzzy increment for ``cat`` from its window minimum (no state change)."""
        e = cat.qlen_min - self.qlen_target
        de = 0.0 if cat.prev_error is None else e - cat.prev_error
        return self.flc.evaluate(_clamp(e * self.sf_i1, -1.0, 1.0),
                                 _clamp(de * self.sf_i2, -1.0, 1.0))

    def update_category(self, cat: CategoryController) -> None:
        e = cat.qlen_min - self.qlen_target
        u = self.control_step(cat)
        n = max(1, self.flow_count())
        p = _clamp(cat.p + u * self.k0 * math.log(n) * cat.output_multiplier, 0.0, 1.0)
        i = cat.index - 1
        if i > 0:
            p = p * (1.0 - cat.alpha) + self.categories[i - 1].p * cat.alpha
        cat.p = _clamp(p, 0.0, 1.0)
        cat.prev_error = e
        cat.qlen_min = self._backlog
        cat.updates += 1

    # -- scheduling ------------------------------------------------------------

    def probability(self, rtt_ms: float) -> float:
        i, w_lo, w_hi = blend_weights(rtt_ms, self.category_rtts)
        cats = self.categories
        if w_hi == 0.0:
            return cats[i].p
        if w_lo == 0.0:
            return cats[i + 1].p
        return w_lo * cats[i].p + w_hi * cats[i + 1].p

    def verdict(self, pkt, rng: random.Random | None = None) -> Verdict:
        p = self.probability(pkt.rtt_annotation)
        if p > 0.0 and (rng or self.rng).random() < p:
            return Verdict.MARK if pkt.ecn_capable else Verdict.DROP
        return Verdict.FORWARD

    def on_enqueue(self, pkt, backlog: int, now: int) -> Verdict:
        observe = getattr(self.flow_count, "observe", None)
        if observe is not None:
            observe(pkt.flow_id, now)
        return self.verdict(pkt)

    def probabilities(self) -> tuple[float, ...]:
        return tuple(c.p for c in self.categories)
