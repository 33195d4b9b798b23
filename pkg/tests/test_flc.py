import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuzzyrtt.flc import (INPUT_LABELS, OUTPUT_LABELS, RULE_TABLE, MembershipFunction,
                          MisoFlc, TermSet, centroid, degree)

FLC = MisoFlc()


def brute_force_cog(flc, e, de, step=1e-4):
    """Discretized Mamdani oracle: sample the aggregated output on a fine grid."""
    lo, hi = flc.out_terms.support
    xs = np.arange(lo, hi + step / 2, step)
    agg = np.zeros_like(xs)
    for i, ti in enumerate(flc.e_terms.terms):
        for j, tj in enumerate(flc.de_terms.terms):
            w = min(degree(ti, e), degree(tj, de))
            if w <= 0:
                continue
            out = flc.out_terms.terms[flc.rules[i][j]]
            mu = np.array([degree(out, x) for x in xs])
            agg = np.maximum(agg, np.minimum(w, mu))
    u = float((xs * agg).sum() / agg.sum())
    return min(1.0, max(-1.0, u))


class TestDegree:
    tri = MembershipFunction(-1 / 3, 0.0, 0.0, 1 / 3)

    def test_peak(self):
        assert degree(self.tri, 0.0) == 1.0

    def test_slope(self):
        assert degree(self.tri, 1 / 6) == pytest.approx(0.5)

    def test_outside_support(self):
        assert degree(self.tri, 0.5) == 0.0

    def test_trapezoid_plateau(self):
        mf = MembershipFunction(0, 1, 2, 3)
        assert [degree(mf, x) for x in (0.5, 1.5, 2.5)] == [0.5, 1.0, 0.5]

    def test_rejects_unordered_breakpoints(self):
        with pytest.raises(ValueError):
            MembershipFunction(1, 0, 2, 3)


@pytest.mark.parametrize("terms", [TermSet.uniform(INPUT_LABELS), FLC.out_terms],
                         ids=["input", "output"])
def test_partition_of_unity(terms):
    for x in np.linspace(-1, 1, 1000):
        assert sum(degree(t, x) for t in terms.terms) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("terms", [TermSet.uniform(INPUT_LABELS), FLC.out_terms],
                         ids=["input", "output"])
def test_term_symmetry(terms):
    n = len(terms)
    for x in np.linspace(-1, 1, 201):
        for k in range(n):
            assert degree(terms.terms[k], x) == pytest.approx(
                degree(terms.terms[n - 1 - k], -x), abs=1e-12)


def test_input_shoulders_saturate_beyond_universe():
    terms = TermSet.uniform(INPUT_LABELS)
    assert degree(terms["PB"], 1.7) == 1.0
    assert degree(terms["NB"], -5.0) == 1.0


def test_rule_table_antisymmetry():
    n = len(INPUT_LABELS)
    mirror = {label: OUTPUT_LABELS[len(OUTPUT_LABELS) - 1 - k] for k, label in enumerate(OUTPUT_LABELS)}
    checked = 0
    for i, j in itertools.product(range(n), range(n)):
        assert RULE_TABLE[i][j] == mirror[RULE_TABLE[n - 1 - i][n - 1 - j]]
        checked += 1
    assert checked == 49
    assert RULE_TABLE[INPUT_LABELS.index("Z")][INPUT_LABELS.index("Z")] == "Z"


def test_rule_table_spot_entries():
    row = INPUT_LABELS.index
    assert RULE_TABLE[row("PB")][row("PB")] == "PH"
    assert RULE_TABLE[row("NB")][row("PB")] == "Z"
    assert RULE_TABLE[row("PS")][row("NB")] == "NM"
    assert RULE_TABLE[row("NM")][row("PS")] == "NS"


def test_zero_input_gives_zero():
    assert FLC.evaluate(0.0, 0.0) == 0.0


def test_full_positive_input_matches_oracle():
    # only (PB, PB) -> PH fires, at degree 1
    assert FLC.evaluate(1.0, 1.0) == pytest.approx(brute_force_cog(FLC, 1.0, 1.0), abs=1e-4)
    assert FLC.evaluate(1.0, 1.0) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("e,de", [(0.3, 0.1), (-0.55, 0.2), (0.9, -0.8), (0.12, 0.71),
                                  (-0.2, -0.45), (0.5, 0.5), (-1.0, 0.0), (0.05, -0.95)])
def test_exact_cog_matches_discretized_oracle(e, de):
    assert FLC.evaluate(e, de) == pytest.approx(brute_force_cog(FLC, e, de), abs=2e-4)


def test_odd_symmetry_grid():
    grid = np.linspace(-1, 1, 101)
    for e in grid:
        for de in grid:
            assert FLC.evaluate(-e, -de) == pytest.approx(-FLC.evaluate(e, de), abs=1e-9)


def test_boundedness_grid():
    grid = np.linspace(-1, 1, 41)
    assert all(-1.0 <= FLC.evaluate(e, de) <= 1.0 for e in grid for de in grid)


def test_monotone_along_diagonal():
    values = [FLC.evaluate(t, t) for t in np.round(np.arange(-1, 1.0001, 0.01), 10)]
    assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))


@settings(max_examples=200, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1))
def test_output_bounded_property(e, de):
    assert -1.0 <= FLC.evaluate(e, de) <= 1.0


def test_non_finite_input_rejected():
    with pytest.raises(ValueError):
        FLC.evaluate(float("nan"), 0.0)
    with pytest.raises(ValueError):
        FLC.evaluate(0.0, float("inf"))


def test_centroid_of_nothing_is_zero():
    assert centroid(FLC.out_terms.terms, [0.0] * 9) == 0.0


def test_centroid_single_symmetric_term():
    terms = FLC.out_terms.terms
    clips = [0.0] * 9
    clips[OUTPUT_LABELS.index("PS")] = 0.4
    assert centroid(terms, clips, *FLC.out_terms.support) == pytest.approx(0.25)
