from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import all_self_avoiding_min
from fppkit.blackbox import (
    BlackBoxParams,
    Box,
    box_class,
    box_statistics,
    boxes_in,
    crossing,
    enlargement_radius,
    is_black,
    region_min_ratio,
)
from fppkit.distributions import parse_dist
from fppkit.errors import ConfigError
from fppkit.experiments import black_box_experiment
from fppkit.lattice import Window, l1, sample_environment

LAWS = ["bern:0.3:0:1", "atoms:1@0.2,2@0.5,3@0.3", "atoms:1@0.02,2@0.95,3@0.03"]


def _brute_min_ratio(env, lo, mask, N):
    pts = [tuple(int(c) + a for c, a in zip(idx, lo)) for idx in zip(*np.nonzero(mask))]
    pairs = [(p, q) for i, p in enumerate(pts) for q in pts[i + 1:] if l1(np.subtract(p, q)) >= N]
    best = all_self_avoiding_min(env, set(pts), pairs)
    vals = [Fraction(int(t), l1(np.subtract(p, q)) * env.denom) for (p, q), t in best.items() if t is not None]
    return min(vals) if vals else float("inf")


@pytest.mark.parametrize("law", LAWS)
def test_path_condition_matches_exhaustive_check(law):
    """All-pairs shortest paths decide the path condition exactly on small regions."""
    rng = np.random.default_rng(0)
    for seed in range(10):
        env = sample_environment(parse_dist(law), Window.sides(6, 6), seed)
        h, w = rng.integers(2, 5, size=2)
        lo = tuple(int(c) for c in rng.integers(0, 6 - np.array([h, w]) + 1))
        hi = (lo[0] + h - 1, lo[1] + w - 1)
        mask = rng.random((h, w)) < 0.8
        for N in (1, 2, 3):
            got = region_min_ratio(env, lo, hi, mask, N)
            assert got == _brute_min_ratio(env, lo, mask, N), (seed, N)


def test_deterministic_law_never_black():
    env = sample_environment(parse_dist("det:3"), Window.centered(14, 14), 0)
    box = Box((0, 0), 0, 2)
    stats = box_statistics(env, box)
    assert stats["min_ratio"] == 3 and stats["max_w"] == 3
    for s0 in (1, 3, 100):
        for d0 in (Fraction(1, 100), 1):
            assert not is_black(stats, BlackBoxParams(2, s0, d0), 3, True)


def test_box_geometry_and_classes():
    b = Box((4, 8), 1, 4)
    assert b.hi == (16, 12)
    assert b.face((5, 8)) == 0 and b.face((5, 12)) == 1 and b.face((5, 10)) == -1
    assert enlargement_radius(4, 2) == 16 and enlargement_radius(2, 3) == 14
    boxes = boxes_in(Window.sides(13, 13), 2)
    assert all(Window.sides(13, 13).contains(bx.lo) and Window.sides(13, 13).contains(bx.hi) for bx in boxes)
    assert all(c % 2 == 0 for bx in boxes for c in bx.corner)
    assert {bx.axis for bx in boxes} == {0, 1}
    same = [bx for bx in boxes if box_class(bx) == box_class(boxes[0])]
    for a in same:
        for c in same:
            if a is not c:
                assert max(abs(p - q) for p, q in zip(a.corner, c.corner)) >= 4 * 2


def test_enlarged_box_must_fit():
    env = sample_environment(parse_dist("bern:0.3:0:1"), Window.sides(10, 10), 0)
    with pytest.raises(ConfigError):
        box_statistics(env, Box((2, 2), 0, 2))


def test_params_validation():
    for args in ((0, 1, 1), (2, 0, 1), (2, 1, 0)):
        with pytest.raises(ConfigError):
            BlackBoxParams(*args)


def test_crossing_extraction():
    box = Box((0, 0), 1, 2)  # y in [0, 2], x in [0, 6]
    path = [(3, -2), (3, -1), (3, 0), (3, 1), (4, 1), (4, 2), (4, 3), (4, 4)]
    assert crossing(path, box) == ((3, 0), (4, 2))
    # endpoint inside the box
    assert crossing(path[2:], box) is None
    # never enters
    assert crossing([(8, y) for y in range(-2, 5)], box) is None
    # enters and leaves through the same face
    assert crossing([(3, -1), (3, 0), (3, 1), (3, 0), (3, -1)], box) is None


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from([(1, 0), (-1, 0), (0, 1), (0, -1)]), min_size=1, max_size=30))
def test_crossing_endpoints_are_first_and_last_inside(moves):
    box = Box((0, 0), 0, 2)
    path = [(-1, 1)]
    for m in moves:
        path.append((path[-1][0] + m[0], path[-1][1] + m[1]))
    res = crossing(path, box)
    inside = [p for p in path if box.contains(p)]
    if res is not None:
        assert res == (inside[0], inside[-1])
        assert not box.contains(path[0]) and not box.contains(path[-1])


def test_experiment_degenerate_and_monotone_sweep():
    win = Window.sides(14, 14)
    rep = black_box_experiment(parse_dist("det:1"), BlackBoxParams(2, 2, Fraction(1, 10)), win, [(10, 10)], 2, 0)
    assert all(r["black"] == 0 for r in rep.records)
    law = parse_dist("atoms:1@0.02,2@0.95,3@0.03")
    rep = black_box_experiment(law, BlackBoxParams(2, 3, Fraction(3, 10)), win, [(10, 10)], 3, 0,
                               s0_grid=[2, 3], delta0_grid=[Fraction(1, 10), Fraction(2, 5)])
    assert rep.aggregates["monotone_in_s0"] and rep.aggregates["antitone_in_delta0"]
    assert len(rep.records) == 3 * 4
    with pytest.raises(ConfigError):
        black_box_experiment(law, BlackBoxParams(8, 3, 1), Window.sides(10, 10), [(5, 5)], 1, 0)
