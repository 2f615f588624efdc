"""Exit criteria of the package, each at its stated scale and tolerance.

Every test prints one ``PASS``/``FAIL`` line (collected again in the
terminal summary). Criteria are implemented as stated; a criterion that the
stated parameters cannot meet fails here rather than being relaxed.
"""
import json
import math
import time
import warnings
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import all_self_avoiding_min, saw_stats, step_sequences
from fppkit.blackbox import BlackBoxParams, Box, region_min_ratio
from fppkit.cli import main
from fppkit.distributions import parse_dist
from fppkit.duality import (
    _argmin_index,
    build_radial_curve,
    check_strict_concavity,
    direct_shift_curve,
    dual_shift_curve,
    mu_from_g,
)
from fppkit.experiments import (
    black_box_experiment,
    geodesic_ratio_experiment,
    length_gap_experiment,
    singularity_experiment,
)
from fppkit.lattice import Window, l1, sample_environment
from fppkit.restricted import (
    INF,
    ClippingWarning,
    check_G_zero_relation,
    check_T_from_G,
    check_tail_bound,
    restricted_passage,
)
from fppkit.standard import geodesic_shift_monotonicity, geodesic_stats, passage_times, shift_sandwich

pytestmark = pytest.mark.acceptance


def report(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


# ---------------------------------------------------------------------------
# 1. standard FPP against exhaustive self-avoiding paths

C1_LAWS = ["bern:0.3:0:1", "bern:0.45:0:1", "atoms:1@0.5,2@0.5", "atoms:1@0.3,2@0.4,3@0.3"]


def test_c1_oracle_equivalence_standard():
    t0 = time.perf_counter()
    checked, bad = 0, []
    for shape in [(4, 4), (3, 3, 3)]:
        # full enumeration on 4x4; on 3x3x3 only prefix-minimizing paths are
        # extended, which keeps every geodesic (each prefix of one is one)
        prune = len(shape) == 3
        for law in C1_LAWS:
            for seed in range(50):
                env = sample_environment(parse_dist(law), Window.sides(*shape), seed, exact=True)
                src = (0,) * len(shape)
                for x, (T, lmin, lmax) in saw_stats(env, src, prune=prune).items():
                    if x == src:
                        continue
                    st = geodesic_stats(env, src, x)
                    checked += 1
                    if (st.T, st.L_min, st.L_max, st.exactness) != (env.to_value(T), lmin, lmax, "exact"):
                        bad.append((shape, law, seed, x))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 120
    report(1, ok, f"{checked} (T, L_min, L_max) triples, {len(bad)} mismatches, {dt:.1f}s (limit 120s)")
    assert ok, bad[:5]


# ---------------------------------------------------------------------------
# 2. restricted DP against all step sequences

C2_LAWS = ["bern:0.3:0:1", "atoms:1@0.5,2@0.5", "atoms:1@0.3,2@0.4,5@0.3"]


def test_c2_oracle_equivalence_restricted():
    t0 = time.perf_counter()
    K = 8
    checked, bad = 0, []
    for law in C2_LAWS:
        for seed in range(10):
            env = sample_environment(parse_dist(law), Window.centered(K, K), seed, exact=True)
            f = restricted_passage(env, (0, 0), K, "both")
            pts = [tuple(p) for p in env.window.coords()]
            for zero in (False, True):
                ref = step_sequences(env, (0, 0), K, zero)
                for k in range(K + 1):
                    for x in pts:
                        want = ref[k].get(x)
                        want = INF if want is None else env.to_value(want)
                        checked += 1
                        if f.value(k, x, zero_steps=zero) != want:
                            bad.append((law, seed, zero, k, x))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 60
    report(2, ok, f"{checked} table entries (K=8, both modes), {len(bad)} mismatches, {dt:.1f}s (limit 60s)")
    assert ok, bad[:5]


# ---------------------------------------------------------------------------
# 3. per-sample structural identities

C3_LAWS = ["bern:0.3:0:1", "bern:0.45:0:1", "atoms:1@0.5,2@0.5", "atoms:1@0.3,2@0.4,3@0.3"]


def _c3_instance(law, seed, rng):
    """All identities on one sample; returns the list of failed identity names."""
    env = sample_environment(parse_dist(law), Window.centered(4, 4), seed, exact=True)
    x = (int(rng.integers(-4, 5)), int(rng.integers(-4, 5)))
    if x == (0, 0):
        x = (1, 0)
    failed = []
    st = geodesic_stats(env, (0, 0), x)
    if st.L_min < l1(x):
        failed.append("L_min >= |x|_1")
    if (st.L_min - l1(x)) % 2 or (st.L_max - l1(x)) % 2:
        failed.append("parity")
    K = st.L_max + int(rng.integers(0, 3))
    with warnings.catch_warnings():
        # window-confined on both sides of the identity
        warnings.simplefilter("ignore", ClippingWarning)
        f = restricted_passage(env, (0, 0), K, "both")
    if not check_G_zero_relation(f):
        failed.append("G0 = running min of G")
    t0 = f.table(zero_steps=True)
    if not all(np.all(t0[k + 1] <= t0[k]) for k in range(K)):
        failed.append("G0 nonincreasing in k")
    res = check_T_from_G(env, f, passage_times(env, (0, 0)), [x], l_max={x: st.L_max})
    if res.status != "pass":
        failed.append("T = G0 at K >= L_max")
    # shifts stay at or above -ess inf so all weights remain nonnegative
    dl, eta = Fraction(int(rng.integers(1, 5)), 8), Fraction(int(rng.integers(1, 9)), 8)
    b = -env.dist.ess_inf + dl + Fraction(int(rng.integers(0, 5)), 4)
    if not shift_sandwich(env, x, b, dl, eta).ok:
        failed.append("shift sandwich")
    a = b - dl
    if not geodesic_shift_monotonicity(env, x, a, b).ok:
        failed.append("shrinking")
    return failed


def test_c3_structural_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    n, bad = 0, []
    for law in C3_LAWS:
        for seed in range(300):
            failed = _c3_instance(law, seed, rng)
            n += 1
            if failed:
                bad.append((law, seed, failed))
    dt = time.perf_counter() - t0
    ok = not bad and n >= 1000 and dt < 300
    report(3, ok, f"{n} instances x 7 identities, {len(bad)} failing instances, {dt:.1f}s (limit 300s)")
    assert ok, bad[:5]


# ---------------------------------------------------------------------------
# 4 and 5. duality on Bernoulli(P{0} = 0.3) along e1 at n = 300, 100 replicas

BERN = "bern:0.3:0:1"
N_SCALE, REPS = 300, 100


@pytest.fixture(scope="module")
def direct_curve():
    t0 = time.perf_counter()
    sc = direct_shift_curve(parse_dist(BERN), (1, 0), [0, Fraction(1, 2), 1, 2, 4], N_SCALE, REPS, 0)
    return sc, time.perf_counter() - t0


def test_c4_duality_reconstruction(direct_curve):
    sc, t_direct = direct_curve
    t0 = time.perf_counter()
    # every admissible step count: the recursion cost depends only on the largest one
    grid = [Fraction(k, N_SCALE) for k in range(N_SCALE + 2, 3 * N_SCALE + 1, 2)]
    g, _ = build_radial_curve(parse_dist(BERN), (1, 0), grid, N_SCALE, REPS, 0, with_zero=False)
    worst, lines = 0.0, []
    for b in [0, Fraction(1, 2), 1, 2]:
        j = sc.b_grid.index(b)
        dual = float(mu_from_g(g, b))
        se = math.hypot(float(g.stderrs[_argmin_index(g, b)]), sc.stderrs[j])
        z = abs(dual - sc.mu_values[j]) / se
        worst = max(worst, z)
        lines.append(f"b={b}: {dual:.4f} vs {sc.mu_values[j]:.4f} ({z:.2f} se)")
    fine = [Fraction(i, 8) for i in range(0, 33)]
    dc = dual_shift_curve(g, fine)
    mus = dc.mu_values
    incr = all(q > p for p, q in zip(mus, mus[1:]))
    slopes = [(q - p) / (c - a) for (a, p), (c, q) in zip(zip(fine, mus), zip(fine[1:], mus[1:]))]
    concave = all(s2 <= s1 for s1, s2 in zip(slopes, slopes[1:]))
    dt = time.perf_counter() - t0 + t_direct
    ok = worst <= 3 and incr and concave and dt < 900
    report(4, ok, f"max |dual - direct| = {worst:.2f} combined se (limit 3); "
                  f"exactly increasing={incr}, concave={concave} on 33 shifts; {dt:.0f}s (limit 900s); "
                  + "; ".join(lines))
    assert ok


def test_c5_strict_concavity(direct_curve):
    sc, dt = direct_curve
    res = check_strict_concavity(sc)
    ok = res["strict"] and res["drop"] >= 3 * res["drop_stderr"] and dt < 1200
    report(5, ok, f"first - last quotient = {res['drop']:.4f}, 3 se = {3 * res['drop_stderr']:.4f}; "
                  f"quotients {[round(q, 4) for q in res['quotients']]}; {dt:.0f}s (limit 1200s)")
    assert ok


# ---------------------------------------------------------------------------
# 6. geodesic ratio bounded away from 1


def test_c6_geodesic_ratio():
    t0 = time.perf_counter()
    rep = geodesic_ratio_experiment(parse_dist(BERN), [(60, 60)], 200, 0)
    e = rep.aggregates["targets"][(60, 60)]
    dt = time.perf_counter() - t0
    lo = e["wilson_at_margin"][0]
    ok = e["margin"] > 0 and lo > 0 and dt < 600
    report(6, ok, f"min L_min/|x|_1 = {e['min_ratio']} (margin {e['margin']}), Wilson lower bound of "
                  f"P{{ratio >= 1 + margin}} = {lo:.3f}; P{{ratio >= 1.01}} = {e['p_ge_1+1/100'][0]:.3f}; "
                  f"{dt:.1f}s (limit 600s)")
    assert ok


# ---------------------------------------------------------------------------
# 7. length gap with a zero atom


def test_c7_length_gap():
    t0 = time.perf_counter()
    rep = length_gap_experiment(parse_dist("bern:0.45:0:1"), 0, [(40, 40)], 200, 0,
                                D_grid=[Fraction(1, 100)])
    e = rep.aggregates["targets"][(40, 40)]
    p, (lo, hi) = e["p_ge_1/100"]
    dt = time.perf_counter() - t0
    ok = lo > 0 and rep.aggregates["label"] == "zero-atom" and dt < 900
    report(7, ok, f"P{{gap >= 0.01}} = {p:.3f}, Wilson [{lo:.3f}, {hi:.3f}]; {e['budget_exceeded']} replicas over "
                  f"budget counted as gap 0; {dt:.1f}s (limit 900s)")
    assert ok


# ---------------------------------------------------------------------------
# 8. singular shifts


def test_c8_singularity_set():
    t0 = time.perf_counter()
    rep = singularity_experiment(1, 2, 1, 20, 50, -1, 5)
    a = rep.aggregates
    identities = all((e["k"] + e["m"]) * (2 + e["b"]) == (e["k"] + e["m"] + 2 * e["ell"]) * (1 + e["b"])
                     for e in rep.records)
    dt = time.perf_counter() - t0
    ok = identities and a["all_identities"] and a["max_gap"] is not None and a["max_gap"] <= Fraction(1, 40) \
        and dt < 1
    report(8, ok, f"{a['count']} shifts, identities hold={identities}; max gap on [-1, 5] = {a['max_gap']} "
                  f"(limit 1/40); {dt * 1000:.0f}ms")
    assert ok


# ---------------------------------------------------------------------------
# 9. tail bound for the zero-step restricted time

C9_SETTINGS = [
    ("atoms:1@0.95,6@0.05", 10, (1, 1), 25),
    ("atoms:1@0.97,8@0.03", 10, (1, 1, 0), 30),
    ("unif:0:1", 9, (1, 0), Fraction(17, 2)),
]


def test_c9_tail_bound():
    t0 = time.perf_counter()
    parts, ok = [], True
    for law, ell, x, s in C9_SETTINGS:
        res = check_tail_bound(parse_dist(law), ell, x, s, 2000, 0)
        ok &= res.ok and res.reps == 2000 and res.lhs_freq <= res.rhs_bound + 4 * res.stderr
        parts.append(f"{law} ell={ell} x={x} s={s}: {res.lhs_freq:.4f} <= {res.rhs_bound:.4g} + 4*{res.stderr:.4f}")
    dt = time.perf_counter() - t0
    ok = ok and dt < 300
    report(9, ok, "; ".join(parts) + f"; {dt:.1f}s (limit 300s)")
    assert ok


# ---------------------------------------------------------------------------
# 10. black boxes

BB_LAW = "atoms:1@0.02,2@0.95,3@0.03"


def _neighbourhood(box, rho):
    lo = tuple(a - rho for a in box.lo)
    hi = tuple(b + rho for b in box.hi)
    g = np.meshgrid(*(np.arange(a, b + 1) for a, b in zip(lo, hi)), indexing="ij")
    gap = sum(np.maximum(0, np.maximum(box.lo[i] - g[i], g[i] - box.hi[i])) for i in range(len(lo)))
    return lo, hi, gap <= rho


def _exhaustive_ratio(env, lo, mask, N):
    pts = [tuple(int(c) + a for c, a in zip(idx, lo)) for idx in zip(*np.nonzero(mask))]
    pairs = [(p, q) for i, p in enumerate(pts) for q in pts[i + 1:] if l1(np.subtract(p, q)) >= N]
    best = all_self_avoiding_min(env, set(pts), pairs)
    return min(Fraction(int(t), l1(np.subtract(p, q)) * env.denom) for (p, q), t in best.items())


def test_c10_black_boxes():
    t0 = time.perf_counter()
    agree, total = 0, 0
    cases = [(law, 1) for law in ["bern:0.3:0:1", "atoms:1@0.2,2@0.5,3@0.3", BB_LAW]] + [(BB_LAW, 2)]
    for law, rho in cases:
        for seed in range(10):
            env = sample_environment(parse_dist(law), Window.centered(6, 6), seed, exact=True)
            lo, hi, mask = _neighbourhood(Box((0, 0), seed % 2, 1), rho)
            total += 1
            agree += region_min_ratio(env, lo, hi, mask, 1) == _exhaustive_ratio(env, lo, mask, 1)
    s0s, dls = [2, Fraction(5, 2), 3], [Fraction(1, 10), Fraction(3, 10), Fraction(2, 5)]
    rep = black_box_experiment(parse_dist(BB_LAW), BlackBoxParams(2, 3, Fraction(1, 10)),
                               Window((0, 0), (19, 19)), [(14, 14)], 20, 0, s0_grid=s0s, delta0_grid=dls)
    a = rep.aggregates
    ps = {k: v["p_black"] for k, v in a["sweep"].items()}
    varied = len(set(ps.values())) > 1
    dt = time.perf_counter() - t0
    ok = agree == total and a["monotone_in_s0"] and a["antitone_in_delta0"] and varied and dt < 600
    table = ", ".join(f"({s},{d}):{p:.3f}" for (s, d), p in sorted(ps.items()))
    report(10, ok, f"shortest-path check agrees with exhaustive on {agree}/{total} neighbourhoods; "
                   f"monotone in s0={a['monotone_in_s0']}, antitone in delta0={a['antitone_in_delta0']}; "
                   f"P{{black}} {table}; {dt:.0f}s (limit 600s)")
    assert ok


# ---------------------------------------------------------------------------
# 11. rerun from manifest

C11_CONFIGS = {
    "ratio": "dist = bern:0.3:0:1\ntargets = 30,30; 20,-10\nreps = 40\n",
    "gap": "dist = bern:0.45:0:1\ntargets = 16,16\nreps = 20\n",
    "singularities": "r = 1\ns = 2\nr0 = 1\n",
    "blackbox": f"dist = {BB_LAW}\nN = 1\ns0 = 3\ndelta0 = 1/10\nwindow = 12x12\ntargets = 9,9\nreps = 3\n"
                "s0_grid = 2, 3\ndelta0_grid = 1/10, 2/5\n",
    "sandwich": "dist = bern:0.45:0:1\nxi = 1,0\nn_grid = 20\nreps = 6\ncurve_reps = 6\n",
}


def test_c11_determinism(tmp_path, capsys):
    t0 = time.perf_counter()
    same = {}
    for name, text in C11_CONFIGS.items():
        cfg = tmp_path / f"{name}.cfg"
        cfg.write_text(text)
        a, b = tmp_path / f"{name}-a", tmp_path / f"{name}-b"
        assert main(["experiment", name, "--config", str(cfg), "--seed", "11", "--threads", "2", "--out", str(a)]) == 0
        assert main(["experiment", "--from-manifest", str(a / "manifest.json"), "--threads", "1", "--out", str(b)]) == 0
        ma, mb = (json.loads((p / "manifest.json").read_text()) for p in (a, b))
        same[name] = ((a / "report.csv").read_bytes() == (b / "report.csv").read_bytes() and ma["files"] == mb["files"]
                      and ma["config_text"] == mb["config_text"])
    capsys.readouterr()
    dt = time.perf_counter() - t0
    ok = all(same.values())
    report(11, ok, f"identical records and digests on rerun: {same}; {dt:.1f}s")
    assert ok
