from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from oracles import geodesic_edges, saw_stats
from fppkit.distributions import parse_dist
from fppkit.errors import NegativeWeightError, PreconditionError
from fppkit.lattice import Window, l1, sample_environment, shift_environment
from fppkit.standard import (
    geodesic_graph,
    geodesic_shift_monotonicity,
    geodesic_stats,
    min_length_geodesic,
    passage_times,
    shift_sandwich,
)

LAWS = ["bern:0.3:0:1", "bern:0.45:0:1", "atoms:1@0.5,2@0.5", "atoms:1@0.3,2@0.4,3@0.3", "det:1"]


def _check_against_oracle(env, source):
    ref = saw_stats(env, source, prune=True)
    for x, (T, lmin, lmax) in ref.items():
        if x == source:
            continue
        st_ = geodesic_stats(env, source, x)
        assert (st_.T, st_.L_min, st_.L_max) == (env.to_value(T), lmin, lmax), x
        assert st_.exactness == "exact"


@pytest.mark.parametrize("law", LAWS)
@pytest.mark.parametrize("shape", [(4, 4), (3, 3, 3), (5, 3)])
def test_matches_self_avoiding_oracle(law, shape):
    for seed in range(3):
        env = sample_environment(parse_dist(law), Window.sides(*shape), seed)
        _check_against_oracle(env, (0,) * len(shape))


def test_interior_source_with_heavy_zero_mass():
    env = sample_environment(parse_dist("bern:0.6:0:1"), Window.centered(2, 2), 5)
    _check_against_oracle(env, (0, 0))


@pytest.mark.parametrize("law", ["bern:0.45:0:1", "atoms:1@0.5,2@0.5"])
def test_geodesic_edge_set_matches_enumeration(law):
    for seed in range(4):
        env = sample_environment(parse_dist(law), Window.sides(4, 4), seed)
        s, x = (0, 0), (3, 3)
        g = geodesic_graph(passage_times(env, s), passage_times(env, x), x)
        assert g.edges() == geodesic_edges(env, s, x)


def test_canonical_geodesic_is_a_shortest_minimizer():
    env = sample_environment(parse_dist("bern:0.3:0:1"), Window.sides(12, 12), 2)
    stats, path = min_length_geodesic(env, (0, 0), (9, 7))
    v = path.vertices
    assert v[0] == (0, 0) and v[-1] == (9, 7)
    assert all(l1(np.subtract(a, b)) == 1 for a, b in zip(v, v[1:]))
    assert len(set(v)) == len(v)
    assert sum(env.weight(a, b) for a, b in zip(v, v[1:])) == stats.T == path.total_time
    assert path.length == stats.L_min


def test_passage_field_source_and_stop():
    env = sample_environment(parse_dist("atoms:1@0.5,2@0.5"), Window.sides(10, 10), 0)
    full = passage_times(env, (0, 0))
    assert full.complete and full.time((0, 0)) == 0
    part = passage_times(env, (0, 0), stop=(2, 2))
    assert part.time((2, 2)) == full.time((2, 2))


def test_float_mode_agrees_with_oracle():
    env = sample_environment(parse_dist("unif:0.5:1.5"), Window.sides(4, 4), 3)
    ref = saw_stats(env, (0, 0), prune=False)
    for x, (T, lmin, lmax) in ref.items():
        if x == (0, 0):
            continue
        st_ = geodesic_stats(env, (0, 0), x)
        assert st_.T == pytest.approx(T, rel=1e-12)
        # continuous law: geodesics are unique
        assert st_.L_min == st_.L_max == lmin == lmax


def test_negative_weights_rejected():
    env = shift_environment(sample_environment(parse_dist("bern:0.3:0:1"), Window.sides(4, 4), 0), Fraction(-1, 2))
    with pytest.raises(NegativeWeightError):
        passage_times(env, (0, 0))


def test_deterministic_law_degenerate_case():
    env = sample_environment(parse_dist("det:2"), Window.sides(8, 8), 0)
    st_ = geodesic_stats(env, (0, 0), (5, 3))
    assert (st_.T, st_.L_min, st_.L_max) == (16, 8, 8)


def test_budget_exhaustion_reports_lower_bound():
    env = sample_environment(parse_dist("bern:0.9:0:1"), Window.sides(9, 9), 0)
    exact = geodesic_stats(env, (0, 0), (8, 8))
    low = geodesic_stats(env, (0, 0), (8, 8), node_budget=5)
    assert low.exactness == "lower-bound"
    assert low.L_min == exact.L_min and low.L_max <= exact.L_max


def test_sandwich_domain_checked():
    env = sample_environment(parse_dist("bern:0.3:0:1"), Window.sides(6, 6), 0)
    with pytest.raises(PreconditionError):
        shift_sandwich(env, (4, 4), 0, Fraction(1, 2), Fraction(1, 2))
    with pytest.raises(PreconditionError):
        geodesic_shift_monotonicity(env, (4, 4), 1, 1)


laws = st.sampled_from(LAWS[:4])


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(laws, st.integers(0, 10**6), st.integers(2, 9), st.integers(0, 9),
       st.fractions(0, 3, max_denominator=4), st.fractions(Fraction(1, 4), 2, max_denominator=4))
def test_sample_level_identities(law, seed, a, b, shift, h):
    """Length bounds, parity, the shift sandwich and shrinking, per sample."""
    env = sample_environment(parse_dist(law), Window.around((0, 0), (a, b), pad=2), seed)
    x = (a, b)
    st_ = geodesic_stats(env, (0, 0), x)
    assert st_.L_min >= l1(x)
    assert (st_.L_min - l1(x)) % 2 == 0 and (st_.L_max - l1(x)) % 2 == 0
    delta = min(h, shift + env.dist.ess_inf) if shift + env.dist.ess_inf > 0 else None
    if delta:
        rec = shift_sandwich(env, x, shift, delta, h)
        assert rec.ok and rec.lhs <= rec.L_min_b <= rec.L_max_b <= rec.rhs
    rec = geodesic_shift_monotonicity(env, x, shift, shift + h)
    assert rec.ok and rec.L_max_b <= rec.L_min_a


@settings(max_examples=40, deadline=None)
@given(laws, st.integers(0, 10**6))
def test_triangle_inequality(law, seed):
    env = sample_environment(parse_dist(law), Window.sides(7, 7), seed)
    f0 = passage_times(env, (0, 0))
    fy = passage_times(env, (3, 4))
    T = f0.times().reshape(env.window.shape)
    Ty = fy.times().reshape(env.window.shape)
    assert np.all(T <= f0.time((3, 4)) + Ty)
