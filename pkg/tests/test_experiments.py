from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fppkit.distributions import parse_dist
from fppkit.errors import ConfigError
from fppkit.experiments import (
    enumerate_singularity_shifts,
    geodesic_ratio_experiment,
    hw_sandwich_experiment,
    length_gap_experiment,
    nd_assumption,
    singularity_experiment,
    wilson,
)


def test_wilson_interval_brackets_estimate():
    lo, hi = wilson(30, 100)
    assert lo < 0.3 < hi
    assert wilson(0, 50)[0] == 0 and wilson(50, 50)[1] == pytest.approx(1)


def test_ratio_deterministic_law_is_one():
    rep = geodesic_ratio_experiment(parse_dist("det:2"), [(8, 5)], 5, 0)
    assert all(r["ratio"] == 1 for r in rep.records)
    assert rep.aggregates["targets"][(8, 5)]["margin"] == 0


def test_ratio_at_least_one_every_replica():
    rep = geodesic_ratio_experiment(parse_dist("bern:0.45:0:1"), [(12, 12), (20, 3)], 30, 4)
    assert all(r["ratio"] >= 1 for r in rep.records)
    assert rep.aggregates["targets"][(12, 12)]["all_ge_1"]


def test_ratio_records_independent_of_threads():
    d = parse_dist("bern:0.3:0:1")
    a = geodesic_ratio_experiment(d, [(15, 15)], 12, 3, threads=1)
    b = geodesic_ratio_experiment(d, [(15, 15)], 12, 3, threads=4)
    assert a.records == b.records and a.aggregates == b.aggregates


def test_gap_deterministic_law_is_zero_and_float_rejected():
    rep = length_gap_experiment(parse_dist("det:1"), 0, [(6, 6)], 4, 0)
    assert all(r["gap"] == 0 for r in rep.records)
    assert rep.aggregates["label"] == "exploratory"
    with pytest.raises(ConfigError):
        length_gap_experiment(parse_dist("unif:0.5:1.5"), 0, [(6, 6)], 2, 0)


def test_gap_budget_exceeded_counts_as_zero():
    rep = length_gap_experiment(parse_dist("bern:0.45:0:1"), 0, [(10, 10)], 6, 0, node_budget=1)
    for r in rep.records:
        if r["exactness"] != "exact":
            assert r["gap"] == 0


def test_gap_larger_at_a_singular_shift():
    d = parse_dist("atoms:1@0.5,2@0.5")
    ss = enumerate_singularity_shifts(1, 2, 1, 1, 3)
    b_sing = next(e.b for e in ss.entries if (e.ell, e.k, e.m) == (1, 1, 0))
    assert b_sing == Fraction(-1, 2)
    sing = length_gap_experiment(d, b_sing, [(12, 12)], 20, 0)
    off = length_gap_experiment(d, Fraction(2071, 5000), [(12, 12)], 20, 0)
    assert sing.aggregates["targets"][(12, 12)]["mean_gap"] > off.aggregates["targets"][(12, 12)]["mean_gap"]
    assert off.aggregates["targets"][(12, 12)]["max_gap"] == 0


def test_atom_structure_labels():
    assert nd_assumption(parse_dist("bern:0.45:0:1")) == "zero-atom"
    assert nd_assumption(parse_dist("atoms:1@0.5,2@0.5")) == "two-atoms"
    assert nd_assumption(parse_dist("atoms:1@0.5,2@0.5"), -1) == "zero-atom"
    assert nd_assumption(parse_dist("det:1")) is None
    assert nd_assumption(parse_dist("unif:0:1")) is None


def test_singularity_examples():
    ss = enumerate_singularity_shifts(1, 2, 1, 1, 4)
    assert [e.k for e in ss.entries] == [1] * 5
    assert ss.shifts() == [Fraction(m + 1, 2) - 1 for m in range(5)]
    e0 = ss.entries[0]
    assert e0.b == Fraction(-1, 2) and (e0.k + e0.m) * (2 + e0.b) == 3 * (1 + e0.b) == Fraction(3, 2)
    ss = enumerate_singularity_shifts(0, 1, 0, 1, 3)
    assert ss.shifts() == [Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2)]
    with pytest.raises(ConfigError):
        enumerate_singularity_shifts(2, 2, 1, 3, 3)
    with pytest.raises(ConfigError):
        enumerate_singularity_shifts(1, 2, 3, 3, 3)


@settings(max_examples=40, deadline=None)
@given(st.fractions(0, 3, max_denominator=6), st.fractions(Fraction(1, 6), 3, max_denominator=6),
       st.fractions(0, 1), st.integers(1, 8), st.integers(1, 12))
def test_singularity_identity_and_order(r, h, frac, ell_max, m_max):
    s, r0 = r + h, r * frac
    ss = enumerate_singularity_shifts(r, s, r0, ell_max, m_max)
    bs = ss.shifts()
    assert bs == sorted(set(bs))
    for e in ss.entries:
        assert (e.k + e.m) * (s + e.b) == (e.k + e.m + 2 * e.ell) * (r + e.b)
        assert e.b > -r0
        step = (s - r) / (2 * e.ell)
        assert (e.k - 1) * step <= r - r0 < e.k * step


def test_density_bound_holds_when_enough_multiples():
    # every ell contributes shifts up to (k + m_max)(s-r)/(2 ell) - r, so m_max must reach past B
    ss = enumerate_singularity_shifts(1, 2, 1, 20, 240)
    gap = ss.max_gap(-1, 5)
    assert gap is not None and gap <= Fraction(1, 40) == ss.density_bound()
    coarse = enumerate_singularity_shifts(1, 2, 1, 5, 240)
    assert ss.max_gap(-1, 5) < coarse.max_gap(-1, 5)


def test_singularity_experiment_report():
    rep = singularity_experiment(0, 1, 0, 4, 40, 0, 4)
    assert rep.aggregates["all_identities"] and rep.aggregates["density_ok"]
    assert rep.aggregates["bound"] == Fraction(1, 8)


def test_sandwich_degenerate_and_continuous():
    rep = hw_sandwich_experiment(parse_dist("det:1"), (1, 0), [0, 1], [20, 30], 2, 0, alpha_steps=8)
    for row in rep.aggregates["table"].values():
        assert row["lambda_lo"] == row["mean_L_min"] == row["mean_L_max"] == row["lambda_hi"] == 1
    rep = hw_sandwich_experiment(parse_dist("unif:0.5:1.5"), (1, 1), [0], [20], 6, 0, alpha_steps=8)
    assert all(r["L_min"] == r["L_max"] for r in rep.records)


def test_sandwich_zero_atom_law():
    rep = hw_sandwich_experiment(parse_dist("bern:0.45:0:1"), (1, 0), [0], [50, 100], 12, 0)
    assert all(row["sandwich_ok"] for row in rep.aggregates["table"].values())
