"""Two-input / one-output Mamdani fuzzy controller.

Inputs are normalized to [-1, 1] by the caller.  Rule activation uses min,
aggregation uses max, and the crisp output is the centre of gravity of the
aggregated polygon, integrated exactly piece by piece.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

INPUT_LABELS = ("NB", "NM", "NS", "Z", "PS", "PM", "PB")
OUTPUT_LABELS = ("NH", "NB", "NM", "NS", "Z", "PS", "PM", "PB", "PH")

# Rows: error term, columns: error-change term (both in INPUT_LABELS order).
RULE_TABLE: tuple[tuple[str, ...], ...] = (
    ("NH", "NH", "NB", "NB", "NM", "NS", "Z"),
    ("NH", "NH", "NB", "NM", "NS", "Z", "PS"),
    ("NB", "NB", "NM", "NS", "Z", "PS", "PM"),
    ("NB", "NM", "NS", "Z", "PS", "PM", "PB"),
    ("NM", "NS", "Z", "PS", "PM", "PB", "PB"),
    ("NS", "Z", "PS", "PM", "PB", "PH", "PH"),
    ("Z", "PS", "PM", "PB", "PB", "PH", "PH"),
)


@dataclass(frozen=True)
class MembershipFunction:
    """Trapezoid with breakpoints a <= b <= c <= d (a triangle when b == c).

    Infinite ``a``/``b`` or ``c``/``d`` give a left or right shoulder.
    """

    a: float
    b: float
    c: float
    d: float
    label: str = ""

    def __post_init__(self):
        if not (self.a <= self.b <= self.c <= self.d):
            raise ValueError(f"breakpoints out of order: {self.a, self.b, self.c, self.d}")

    def degree(self, x: float) -> float:
        return degree(self, x)


def degree(mf: MembershipFunction, x: float) -> float:
    if x < mf.a or x > mf.d:
        return 0.0
    if mf.b <= x <= mf.c:
        return 1.0
    if x < mf.b:
        return (x - mf.a) / (mf.b - mf.a)
    return (mf.d - x) / (mf.d - mf.c)


class TermSet:
    """Ordered membership functions over the universe [-1, 1]."""

    def __init__(self, terms: Sequence[MembershipFunction]):
        self.terms = tuple(terms)
        self.labels = tuple(t.label for t in self.terms)
        self._index = {label: i for i, label in enumerate(self.labels)}

    @classmethod
    def uniform(cls, labels: Sequence[str], shoulders: bool = True) -> "TermSet":
        """Ruspini partition with evenly spaced peaks from -1 to 1.

        Inner terms are triangles reaching zero at the neighbouring peaks.  With
        ``shoulders`` the outermost terms saturate beyond the universe (input
        sets); otherwise they are full triangles spilling one spacing past +-1,
        so a clipped edge term keeps its centroid on its peak (output set).
        """
        n = len(labels)
        peaks = [-1.0 + 2.0 * k / (n - 1) for k in range(n)]
        # exact values for symmetric pairs
        for k in range(n // 2):
            peaks[n - 1 - k] = -peaks[k]
        if n % 2:
            peaks[n // 2] = 0.0
        spill = math.inf if shoulders else 1.0 + 2.0 / (n - 1)
        terms = []
        for k, label in enumerate(labels):
            left = peaks[k - 1] if k > 0 else -spill
            right = peaks[k + 1] if k < n - 1 else spill
            b = peaks[k] if k > 0 or not shoulders else -math.inf
            c = peaks[k] if k < n - 1 or not shoulders else math.inf
            terms.append(MembershipFunction(left, b, c, right, label))
        return cls(terms)

    @property
    def support(self) -> tuple[float, float]:
        return self.terms[0].a, self.terms[-1].d

    def __len__(self):
        return len(self.terms)

    def __getitem__(self, label: str) -> MembershipFunction:
        return self.terms[self._index[label]]

    def index(self, label: str) -> int:
        return self._index[label]

    def fuzzify(self, x: float) -> list[tuple[int, float]]:
        """Return (term index, degree) for every term with a positive degree."""
        out = []
        i = 0
        for mf in self.terms:
            if mf.a <= x <= mf.d:
                mu = degree(mf, x)
                if mu > 0.0:
                    out.append((i, mu))
            i += 1
        return out


def _linear_on(mf: MembershipFunction, lo: float, hi: float) -> tuple[float, float]:
    """Slope and intercept of ``mf`` on an interval containing no breakpoint."""
    mid = 0.5 * (lo + hi)
    if mid < mf.a or mid > mf.d or mf.b <= mid <= mf.c:
        return 0.0, degree(mf, mid)
    if mid < mf.b:
        slope = 1.0 / (mf.b - mf.a)
        return slope, -mf.a * slope
    slope = -1.0 / (mf.d - mf.c)
    return slope, mf.d * -slope


def centroid(terms: Sequence[MembershipFunction], clips: Sequence[float],
             lo: float = -1.0, hi: float = 1.0) -> float:
    """Centre of gravity of max_k min(clips[k], terms[k](x)) over [lo, hi].

    The aggregated shape is piecewise linear; the integrals are evaluated
    exactly on each linear piece.  Returns 0 when the shape has no area.
    """
    active = [(mf, h) for mf, h in zip(terms, clips) if h > 0.0]
    if not active:
        return 0.0
    cuts = {lo, hi}
    for mf, _ in active:
        for p in (mf.a, mf.b, mf.c, mf.d):
            if lo < p < hi:
                cuts.add(p)
    cuts = sorted(cuts)

    area = 0.0
    moment = 0.0
    for x0, x1 in zip(cuts, cuts[1:]):
        # each candidate is y = s*x + t on (x0, x1)
        lines = []
        for mf, h in active:
            lines.append(_linear_on(mf, x0, x1))
            lines.append((0.0, h))
        knots = {x0, x1}
        for i in range(len(lines)):
            s1, t1 = lines[i]
            for j in range(i + 1, len(lines)):
                s2, t2 = lines[j]
                if s1 != s2:
                    x = (t2 - t1) / (s1 - s2)
                    if x0 < x < x1:
                        knots.add(x)
        knots = sorted(knots)
        for u0, u1 in zip(knots, knots[1:]):
            f0 = _aggregate(active, u0, x0, x1)
            f1 = _aggregate(active, u1, x0, x1)
            w = u1 - u0
            area += 0.5 * (f0 + f1) * w
            moment += w * (u0 * (2.0 * f0 + f1) + u1 * (f0 + 2.0 * f1)) / 6.0
    if area <= 0.0:
        return 0.0
    return moment / area


def _aggregate(active, x, x0, x1):
    best = 0.0
    for mf, h in active:
        s, t = _linear_on(mf, x0, x1)
        v = min(h, s * x + t)
        if v > best:
            best = v
    return best


def _segment_lines(terms, lo, hi):
    """Split [lo, hi] at every breakpoint; keep each term's line where it is non-zero."""
    cuts = {lo, hi}
    for mf in terms:
        for p in (mf.a, mf.b, mf.c, mf.d):
            if lo < p < hi:
                cuts.add(p)
    cuts = sorted(cuts)
    segments = []
    for x0, x1 in zip(cuts, cuts[1:]):
        lines = []
        for k, mf in enumerate(terms):
            s, t = _linear_on(mf, x0, x1)
            if s * x0 + t > 0.0 or s * x1 + t > 0.0:
                lines.append((k, s, t))
        segments.append((x0, x1, tuple(lines)))
    return tuple(segments)


def _segment_centroid(segments, clips) -> float:
    area = 0.0
    moment = 0.0
    for x0, x1, terms in segments:
        lines = []
        for k, s, t in terms:
            h = clips[k]
            if h > 0.0:
                lines.append((s, t, h))
        if not lines:
            continue
        knots = [x0, x1]
        n = len(lines)
        for i in range(n):
            s1, t1, h1 = lines[i]
            if s1 != 0.0:
                for _, _, h in lines:
                    x = (h - t1) / s1
                    if x0 < x < x1:
                        knots.append(x)
                for j in range(i + 1, n):
                    s2, t2, _ = lines[j]
                    if s1 != s2:
                        x = (t2 - t1) / (s1 - s2)
                        if x0 < x < x1:
                            knots.append(x)
        knots.sort()
        prev_x = prev_f = None
        for x in knots:
            f = 0.0
            for s, t, h in lines:
                v = s * x + t
                if v > h:
                    v = h
                if v > f:
                    f = v
            if prev_x is not None:
                w = x - prev_x
                if w > 0.0:
                    area += 0.5 * (prev_f + f) * w
                    moment += w * (prev_x * (2.0 * prev_f + f) + x * (prev_f + 2.0 * f)) / 6.0
            prev_x, prev_f = x, f
    if area <= 0.0:
        return 0.0
    return moment / area


class MisoFlc:
    """Stateless Mamdani controller mapping (error, error change) to an output in [-1, 1]."""

    def __init__(self, e_terms: TermSet | None = None, de_terms: TermSet | None = None,
                 out_terms: TermSet | None = None,
                 rules: Sequence[Sequence[str]] = RULE_TABLE):
        self.e_terms = e_terms or TermSet.uniform(INPUT_LABELS)
        self.de_terms = de_terms or TermSet.uniform(INPUT_LABELS)
        self.out_terms = out_terms or TermSet.uniform(OUTPUT_LABELS, shoulders=False)
        lo, hi = self.out_terms.support
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError("output terms must have bounded support")
        self._support = (lo, hi)
        if len(rules) != len(self.e_terms) or any(len(r) != len(self.de_terms) for r in rules):
            raise ValueError("rule table shape does not match the input term sets")
        self.rules = tuple(tuple(self.out_terms.index(label) for label in row) for row in rules)
        self._segments = _segment_lines(self.out_terms.terms, lo, hi)

    def evaluate(self, e_norm: float, de_norm: float) -> float:
        if not (math.isfinite(e_norm) and math.isfinite(de_norm)):
            raise ValueError(f"non-finite controller input ({e_norm}, {de_norm})")
        clips = [0.0] * len(self.out_terms)
        for i, mu_e in self.e_terms.fuzzify(e_norm):
            row = self.rules[i]
            for j, mu_de in self.de_terms.fuzzify(de_norm):
                strength = mu_e if mu_e < mu_de else mu_de
                k = row[j]
                if strength > clips[k]:
                    clips[k] = strength
        u = _segment_centroid(self._segments, clips)
        return -1.0 if u < -1.0 else (1.0 if u > 1.0 else u)

    __call__ = evaluate
