"""Scenario description, config-file parsing and flow sizing."""

from __future__ import annotations

import configparser
import dataclasses
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from statistics import NormalDist
from typing import Sequence

from .aqm.fuzzyrtt import ALPHAS, CATEGORY_RTTS_MS, DEFAULT_K0

LOSS_TARGETS = {"light": 0.001, "medium": 0.005, "heavy": 0.01}
AQMS = ("fuzzyrtt", "red", "codel", "droptail")
RTT_SPECS = ("uniform-categories", "lognormal", "explicit")
N_PROVIDERS = ("exact", "windowed")


class ConfigError(ValueError):
    """Invalid scenario; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def size_flow_count(level: str, bandwidth: float, rtts_ms: Sequence[float], mss: int = 536) -> int:
    """Number of long-lived flows expected to drive the link to ``level``'s loss ratio.

    Uses the square-root throughput model B = (8 MSS / rtt) * sqrt(3 / (2p)).
    """
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    if not rtts_ms:
        raise ValueError("need at least one RTT")
    try:
        p = LOSS_TARGETS[level]
    except KeyError:
        raise ValueError(f"unknown congestion level {level!r}") from None
    scale = math.sqrt(3.0 / (2.0 * p))
    mean_rate = math.fsum(8 * mss / (r / 1000.0) * scale for r in rtts_ms) / len(rtts_ms)
    return max(2, round(bandwidth / mean_rate))


def lognormal_quantiles(median_ms: float, sigma_factor: float, n: int = 999) -> list[float]:
    """Evenly spaced quantiles of a log-normal RTT distribution."""
    dist = NormalDist(math.log(median_ms), math.log(sigma_factor))
    return [math.exp(dist.inv_cdf((k + 0.5) / n)) for k in range(n)]


@dataclass
class FlowGroup:
    start_s: float
    stop_s: float
    size: str  # a congestion level or an explicit flow count


@dataclass
class FlowPlan:
    flow_id: int
    rtt_ms: float
    start_s: float
    stop_s: float


@dataclass
class Scenario:
    name: str = "scenario"
    bottleneck_bw: float = 10e6
    bottleneck_delay_ms: float = 1.0
    mss: int = 536
    target_delay_ms: float = 10.0
    aqm: str = "fuzzyrtt"
    ecn: bool | None = None
    rtt_spec: str = "uniform-categories"
    rtts_ms: list[float] = field(default_factory=list)
    rtt_jitter: float = 0.05
    lognormal_median_ms: float = 149.0
    lognormal_sigma: float = 1.5
    congestion: str = "light"
    duration_s: float = 120.0
    warmup_s: float | None = None
    seed: int = 1
    start_jitter_s: float = 2.0
    groups: list[FlowGroup] = field(default_factory=list)
    k0: float = DEFAULT_K0
    n_provider: str = "exact"
    n_window_ms: float = 1000.0
    alphas: list[float] = field(default_factory=lambda: list(ALPHAS))
    category_rtts_ms: list[float] = field(default_factory=lambda: list(CATEGORY_RTTS_MS))
    red_min_th: float | None = None
    red_max_th: float | None = None
    red_max_p: float = 0.1
    red_w_q: float = 0.002
    codel_target_ms: float = 5.0
    codel_interval_ms: float = 100.0
    buffer_packets: int | None = None
    access_bw: float | None = None

    def __post_init__(self):
        # unset means on, except for CoDel which is drop-only
        if self.ecn is None:
            self.ecn = self.aqm != "codel"

    @property
    def warmup(self) -> float:
        return 0.2 * self.duration_s if self.warmup_s is None else self.warmup_s

    @property
    def qlen_target(self) -> float:
        return self.bottleneck_bw * self.target_delay_ms / 1000.0 / (8 * self.mss)

    def validate(self) -> "Scenario":
        if self.bottleneck_bw <= 0:
            raise ConfigError("bottleneck_bw", "must be positive")
        if self.bottleneck_delay_ms <= 0:
            raise ConfigError("bottleneck_delay", "must be positive")
        if self.mss <= 0 or self.mss + 40 > 576:
            raise ConfigError("mss", "must be positive and fit a 576-byte MTU")
        if self.target_delay_ms <= 0:
            raise ConfigError("target_delay", "must be positive")
        if self.aqm not in AQMS:
            raise ConfigError("aqm", f"must be one of {', '.join(AQMS)}")
        if self.aqm == "codel" and self.ecn:
            raise ConfigError("ecn", "CoDel runs drop-only; set ecn = false")
        if self.rtt_spec not in RTT_SPECS:
            raise ConfigError("rtt_spec", f"must be one of {', '.join(RTT_SPECS)}")
        if self.rtt_spec == "explicit" and not self.rtts_ms:
            raise ConfigError("rtts", "explicit rtt_spec needs a list of RTTs")
        if any(r <= 0 for r in self.rtts_ms):
            raise ConfigError("rtts", "RTTs must be positive")
        if any(r < 2 * self.bottleneck_delay_ms for r in self.rtts_ms):
            raise ConfigError("rtts", "every RTT must be at least twice the bottleneck delay")
        if not 0 <= self.rtt_jitter < 1:
            raise ConfigError("rtt_jitter", "must lie in [0, 1)")
        if self.duration_s <= 0:
            raise ConfigError("duration", "must be positive")
        if not 0 <= self.warmup < self.duration_s:
            raise ConfigError("warmup", "must lie in [0, duration)")
        if self.start_jitter_s < 0:
            raise ConfigError("start_jitter", "must be non-negative")
        if not self.groups:
            _check_size("congestion", self.congestion)
        for g in self.groups:
            _check_size("groups", g.size)
            if g.start_s < 0 or g.stop_s <= g.start_s:
                raise ConfigError("groups", f"bad window {g.start_s}-{g.stop_s}")
        if self.n_provider not in N_PROVIDERS:
            raise ConfigError("n_provider", f"must be one of {', '.join(N_PROVIDERS)}")
        if self.n_window_ms <= 0:
            raise ConfigError("n_window", "must be positive")
        if self.k0 <= 0:
            raise ConfigError("k0", "must be positive")
        if len(self.alphas) != len(self.category_rtts_ms):
            raise ConfigError("alphas", "needs one weight per category")
        if any(not 0 <= a <= 1 for a in self.alphas):
            raise ConfigError("alphas", "weights must lie in [0, 1]")
        if any(b <= a for a, b in zip(self.category_rtts_ms, self.category_rtts_ms[1:])):
            raise ConfigError("category_rtts", "must be strictly increasing")
        if self.buffer_packets is not None and self.buffer_packets < 1:
            raise ConfigError("buffer_packets", "must be at least 1")
        return self

    # -- flow population -------------------------------------------------------

    def sizing_rtts(self) -> list[float]:
        if self.rtt_spec == "uniform-categories":
            return list(self.category_rtts_ms)
        if self.rtt_spec == "lognormal":
            return lognormal_quantiles(self.lognormal_median_ms, self.lognormal_sigma)
        return list(self.rtts_ms)

    def flow_count(self, size: str | None = None) -> int:
        size = self.congestion if size is None else size
        if size.isdigit():
            return int(size)
        return size_flow_count(size, self.bottleneck_bw, self.sizing_rtts(), self.mss)

    def plan_flows(self) -> list[FlowPlan]:
        """Assign every flow its RTT and activity window, deterministically from the seed."""
        rng = random.Random(f"{self.seed}:flows")
        inf = math.inf
        groups = self.groups or [FlowGroup(0.0, inf, self.congestion)]
        plans: list[FlowPlan] = []
        cumulative = 0
        for g in groups:
            if g.size.isdigit():
                count = int(g.size)
            else:
                count = max(0, self.flow_count(g.size) - cumulative)
            cumulative += count
            for _ in range(count):
                fid = len(plans)
                start = g.start_s + rng.uniform(0.0, self.start_jitter_s)
                stop = inf if math.isinf(g.stop_s) else g.stop_s + rng.uniform(0.0, self.start_jitter_s)
                plans.append(FlowPlan(fid, self._rtt_for(fid, rng), start, stop))
        return plans

    def _rtt_for(self, fid: int, rng: random.Random) -> float:
        floor = 2 * self.bottleneck_delay_ms + 1.0
        if self.rtt_spec == "uniform-categories":
            cats = self.category_rtts_ms
            base = cats[fid % len(cats)]
            return max(floor, base * (1.0 + rng.uniform(-self.rtt_jitter, self.rtt_jitter)))
        if self.rtt_spec == "lognormal":
            r = rng.lognormvariate(math.log(self.lognormal_median_ms), math.log(self.lognormal_sigma))
            return max(floor, r)
        return self.rtts_ms[fid % len(self.rtts_ms)]

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)


def _check_size(key: str, size: str) -> None:
    if not (size in LOSS_TARGETS or (size.isdigit() and int(size) >= 1)):
        raise ConfigError(key, f"{size!r} is neither a congestion level nor a positive count")


# -- config files ---------------------------------------------------------------

_UNITS = {"": 1.0, "k": 1e3, "m": 1e6, "g": 1e9}


def parse_rate(text: str) -> float:
    t = text.strip().lower().replace(" ", "")
    for suffix in ("bps", "b/s"):
        if t.endswith(suffix):
            t = t[: -len(suffix)]
    unit = t[-1] if t and t[-1] in "kmg" else ""
    return float(t[: len(t) - len(unit)]) * _UNITS[unit]


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _groups(text: str) -> list[FlowGroup]:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        window, _, size = item.partition(":")
        start, _, stop = window.partition("-")
        out.append(FlowGroup(float(start), math.inf if stop.strip() in ("", "inf") else float(stop),
                             size.strip()))
    return out


# key -> (Scenario attribute, converter)
_KEYS = {
    "name": ("name", str),
    "bottleneck_bw": ("bottleneck_bw", parse_rate),
    "bottleneck_delay": ("bottleneck_delay_ms", float),
    "mss": ("mss", int),
    "target_delay": ("target_delay_ms", float),
    "aqm": ("aqm", lambda s: s.strip().lower()),
    "ecn": ("ecn", _bool),
    "rtt_spec": ("rtt_spec", lambda s: s.strip().lower()),
    "rtts": ("rtts_ms", _floats),
    "rtt_jitter": ("rtt_jitter", float),
    "lognormal_median": ("lognormal_median_ms", float),
    "lognormal_sigma": ("lognormal_sigma", float),
    "congestion": ("congestion", lambda s: s.strip().lower()),
    "duration": ("duration_s", float),
    "warmup": ("warmup_s", float),
    "seed": ("seed", int),
    "start_jitter": ("start_jitter_s", float),
    "groups": ("groups", _groups),
    "k0": ("k0", float),
    "n_provider": ("n_provider", lambda s: s.strip().lower()),
    "n_window": ("n_window_ms", float),
    "alphas": ("alphas", _floats),
    "category_rtts": ("category_rtts_ms", _floats),
    "red_min_th": ("red_min_th", float),
    "red_max_th": ("red_max_th", float),
    "red_max_p": ("red_max_p", float),
    "red_w_q": ("red_w_q", float),
    "codel_target": ("codel_target_ms", float),
    "codel_interval": ("codel_interval_ms", float),
    "buffer_packets": ("buffer_packets", int),
    "access_bw": ("access_bw", parse_rate),
}


def parse_scenario(text: str, name: str | None = None, **overrides) -> Scenario:
    """Parse ``key = value`` lines (``#`` comments, comma-separated lists)."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",),
                                       inline_comment_prefixes=("#",), delimiters=("=",))
    parser.optionxform = str
    try:
        parser.read_string("[scenario]\n" + text)
    except configparser.Error as exc:
        raise ConfigError("syntax", str(exc).splitlines()[0]) from None
    values = {}
    if name is not None:
        values["name"] = name
    for key, raw in parser["scenario"].items():
        if key not in _KEYS:
            raise ConfigError(key, "unknown key")
        attr, conv = _KEYS[key]
        try:
            values[attr] = conv(raw)
        except (ValueError, IndexError) as exc:
            raise ConfigError(key, f"cannot parse {raw!r} ({exc})") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    return Scenario(**values).validate()


def load_scenario(path: str | Path, **overrides) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(), name=path.stem.split(".")[0], **overrides)
