"""Replicated Monte Carlo experiments on geodesic lengths and shift singularities.

Every experiment returns an :class:`ExperimentReport`. Replica ``r`` always
uses the environment keyed by ``(seed, r, stream)``, so the per-replica
records depend only on the configuration and not on scheduling.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.stats import binomtest

from . import __version__
from .blackbox import BlackBoxParams, box_class, box_statistics, boxes_in, crossing, enlargement_radius, is_black
from .distributions import WeightDistribution, to_fraction
from .duality import alpha_grid as make_alpha_grid
from .duality import build_radial_curve, lambda_interval
from .errors import ConfigError
from .kernels import BACKEND
from .lattice import Window, l1, sample_environment, shift_environment
from .restricted import shape_point
from .standard import DEFAULT_NODE_BUDGET, geodesic_stats, min_length_geodesic, passage_times

__all__ = [
    "ExperimentReport",
    "SingularityEntry",
    "SingularitySet",
    "wilson",
    "geodesic_ratio_experiment",
    "length_gap_experiment",
    "enumerate_singularity_shifts",
    "singularity_experiment",
    "black_box_experiment",
    "hw_sandwich_experiment",
    "nd_assumption",
]


@dataclass
class ExperimentReport:
    """Per-replica records plus aggregates and a run manifest.

    ``columns`` fixes the order in which record fields are written.
    """

    name: str
    config: dict
    columns: tuple
    records: list = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)
    exact: bool = True


def wilson(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    ci = binomtest(int(k), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return (float(ci.low), float(ci.high))


def _map(fn: Callable, items, threads: int = 1):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _manifest(name: str, config: dict, t0: float, started: str) -> dict:
    return {
        "experiment": name,
        "config": config,
        "seed": config.get("seed"),
        "version": __version__,
        "backend": BACKEND,
        "started": started,
        "wall_time_s": round(time.perf_counter() - t0, 3),
    }


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _targets(targets) -> list[tuple]:
    out = [tuple(int(c) for c in t) for t in targets]
    if not out:
        raise ConfigError("at least one target is required")
    if len({len(t) for t in out}) != 1:
        raise ConfigError("targets have different dimensions")
    if any(l1(t) == 0 for t in out):
        raise ConfigError("targets must differ from the origin")
    return out


def _default_pad(targets) -> int:
    return max(4, math.ceil(0.25 * max(max(abs(c) for c in t) for t in targets)))


def _mean_se(vals) -> tuple[float, float]:
    a = np.array([float(v) for v in vals])
    if len(a) < 2:
        return float(a.mean()) if len(a) else math.nan, 0.0
    if np.ptp(a) == 0:
        return float(a[0]), 0.0
    return float(a.mean()), float(a.std(ddof=1) / math.sqrt(len(a)))


def nd_assumption(dist: WeightDistribution, b=0) -> str | None:
    """Which atom structure the shifted law has, or ``None``.

    ``"zero-atom"`` when the least atom shifts to zero, ``"two-atoms"`` when
    at least two shifted atoms are positive (their ratio is rational in exact
    arithmetic). Whether the zero atom is below the percolation threshold is
    left to the user.
    """
    if not dist.atomic:
        return None
    b = to_fraction(b)
    atoms = [(v + b, p) for v, p in dist.atoms()]
    if atoms[0][0] == 0 and atoms[0][1] < 1:
        return "zero-atom"
    if sum(1 for v, _ in atoms if v > 0) >= 2:
        return "two-atoms"
    return None


# ---------------------------------------------------------------------------
# geodesic length ratio


def geodesic_ratio_experiment(
    dist: WeightDistribution,
    targets: Sequence,
    reps: int,
    seed: int,
    *,
    deltas: Sequence = (0.005, 0.01, 0.02, 0.05),
    pad: int | None = None,
    exact: bool | None = None,
    threads: int = 1,
    stream: int = 10,
) -> ExperimentReport:
    """``L_min(0, x) / |x|_1`` across replicas.

    Aggregates per target: minimum, mean, the margin ``min - 1`` with a Wilson
    interval for ``P{ratio >= 1 + margin}``, and ``P{ratio >= 1 + delta}`` for
    each ``delta``.
    """
    t0, started = time.perf_counter(), _now()
    targets = _targets(targets)
    pad = _default_pad(targets) if pad is None else int(pad)
    win = Window.around(*targets, pad=pad)
    config = dict(experiment="ratio", dist=dist.spec(), targets=targets, reps=reps, seed=seed,
                  deltas=[str(to_fraction(x)) for x in deltas], pad=pad, window=win.spec(), exact=exact,
                  stream=stream)
    origin = (0,) * len(targets[0])

    def one(r):
        env = sample_environment(dist, win, seed, r, exact=exact, stream=stream)
        pf = passage_times(env, origin)
        rows = []
        for x in targets:
            i = win.index(x)
            lmin = int(pf.hops[i])
            rows.append(dict(replica=r, target=x, T=env.to_value(pf.raw[i]), L_min=lmin, ratio=Fraction(lmin, l1(x))))
        return rows

    records = [row for rows in _map(one, range(reps), threads) for row in rows]
    agg = {"pc_assumption": "not checked; P{t = r0} below the bond percolation threshold is the user's responsibility",
           "p_at_r0": str(dist.atoms()[0][1]) if dist.atomic else "0"}
    per = {}
    for x in targets:
        ratios = [row["ratio"] for row in records if row["target"] == x]
        m, se = _mean_se(ratios)
        rmin = min(ratios)
        margin = rmin - 1
        k = sum(1 for q in ratios if q >= 1 + margin)
        entry = {"min_ratio": rmin, "mean_ratio": m, "stderr": se, "margin": margin,
                 "p_at_margin": k / len(ratios), "wilson_at_margin": wilson(k, len(ratios)),
                 "all_ge_1": all(q >= 1 for q in ratios)}
        for dl in deltas:
            dq = to_fraction(dl)
            kd = sum(1 for q in ratios if q >= 1 + dq)
            entry[f"p_ge_1+{dq}"] = (kd / len(ratios), wilson(kd, len(ratios)))
        per[x] = entry
    agg["targets"] = per
    cols = ("replica", "target", "T", "L_min", "ratio")
    rep = ExperimentReport("ratio", config, cols, records, agg, exact=bool(dist.atomic) if exact is None else exact)
    rep.manifest = _manifest("ratio", config, t0, started)
    return rep


# ---------------------------------------------------------------------------
# length gap


def length_gap_experiment(
    dist: WeightDistribution,
    b,
    targets: Sequence,
    reps: int,
    seed: int,
    *,
    D_grid: Sequence = (0.005, 0.01, 0.02, 0.05),
    pad: int | None = None,
    node_budget: int = DEFAULT_NODE_BUDGET,
    threads: int = 1,
    stream: int = 11,
) -> ExperimentReport:
    """``(L_max - L_min) / |x|_1`` at shift ``b`` across replicas.

    Needs exact arithmetic (an atomic law). A replica whose longest-geodesic
    search exceeds ``node_budget`` is recorded with gap 0.
    """
    if not dist.atomic:
        raise ConfigError("the length gap needs exact arithmetic; use an atomic law")
    t0, started = time.perf_counter(), _now()
    targets = _targets(targets)
    b = to_fraction(b)
    if b < -to_fraction(dist.ess_inf):
        raise ConfigError(f"shift {b} is below -ess inf")
    pad = _default_pad(targets) if pad is None else int(pad)
    win = Window.around(*targets, pad=pad)
    label = nd_assumption(dist, b)
    config = dict(experiment="gap", dist=dist.spec(), b=str(b), targets=targets, reps=reps, seed=seed,
                  D_grid=[str(to_fraction(x)) for x in D_grid], pad=pad, window=win.spec(),
                  node_budget=node_budget, stream=stream)
    origin = (0,) * len(targets[0])

    def one(r):
        env = shift_environment(sample_environment(dist, win, seed, r, stream=stream), b)
        rows = []
        for x in targets:
            st = geodesic_stats(env, origin, x, node_budget)
            raw = st.L_max - st.L_min
            gap = Fraction(raw, l1(x)) if st.exactness == "exact" else Fraction(0)
            rows.append(dict(replica=r, target=x, T=st.T, L_min=st.L_min, L_max=st.L_max,
                             exactness=st.exactness, gap=gap))
        return rows

    records = [row for rows in _map(one, range(reps), threads) for row in rows]
    agg = {"label": label or "exploratory", "targets": {}}
    for x in targets:
        gaps = [row["gap"] for row in records if row["target"] == x]
        over = sum(1 for row in records if row["target"] == x and row["exactness"] != "exact")
        m, se = _mean_se(gaps)
        entry = {"mean_gap": m, "stderr": se, "max_gap": max(gaps), "budget_exceeded": over}
        for D in D_grid:
            Dq = to_fraction(D)
            k = sum(1 for g in gaps if g >= Dq)
            entry[f"p_ge_{Dq}"] = (k / len(gaps), wilson(k, len(gaps)))
        agg["targets"][x] = entry
    cols = ("replica", "target", "T", "L_min", "L_max", "exactness", "gap")
    rep = ExperimentReport("gap", config, cols, records, agg)
    rep.manifest = _manifest("gap", config, t0, started)
    return rep


# ---------------------------------------------------------------------------
# singular shifts


@dataclass(frozen=True)
class SingularityEntry:
    ell: int
    k: int
    m: int
    b: Fraction

    def identity_holds(self, r, s) -> bool:
        return (self.k + self.m) * (s + self.b) == (self.k + self.m + 2 * self.ell) * (r + self.b)


@dataclass(frozen=True)
class SingularitySet:
    r: Fraction
    s: Fraction
    r0: Fraction
    ell_max: int
    m_max: int
    entries: tuple

    def shifts(self) -> list[Fraction]:
        return [e.b for e in self.entries]

    def max_gap(self, lo, hi) -> Fraction | None:
        """Largest distance between consecutive shifts lying in ``[lo, hi]``."""
        lo, hi = to_fraction(lo), to_fraction(hi)
        bs = [b for b in self.shifts() if lo <= b <= hi]
        if len(bs) < 2:
            return None
        return max(y - x for x, y in zip(bs, bs[1:]))

    def density_bound(self) -> Fraction:
        return (self.s - self.r) / (2 * self.ell_max)


def enumerate_singularity_shifts(r, s, r0, ell_max: int, m_max: int) -> SingularitySet:
    """Shifts at which two atoms ``r < s`` make geodesic length ambiguous.

    For each ``ell`` the integer ``k`` satisfies
    ``(k-1)(s-r)/(2 ell) <= r - r0 < k(s-r)/(2 ell)`` and the shifts are
    ``b_m = (k+m)(s-r)/(2 ell) - r`` for ``m = 0..m_max``, so that
    ``(k+m)`` steps at ``s`` weigh as much as ``(k+m+2 ell)`` at ``r``.
    Exact rationals throughout; duplicates keep the smallest ``(ell, m)``.
    """
    r, s, r0 = to_fraction(r), to_fraction(s), to_fraction(r0)
    if not r < s:
        raise ConfigError("need r < s")
    if not 0 <= r0 <= r:
        raise ConfigError("need 0 <= r0 <= r")
    if ell_max < 1 or m_max < 1:
        raise ConfigError("ell_max and m_max must be >= 1")
    seen = {}
    for ell in range(1, ell_max + 1):
        step = (s - r) / (2 * ell)
        k = math.floor((r - r0) / step) + 1
        for m in range(m_max + 1):
            b = (k + m) * step - r
            e = SingularityEntry(ell, k, m, b)
            if not e.identity_holds(r, s) or not b > -r0:  # pragma: no cover
                raise AssertionError(f"bad singular shift {e}")
            if b not in seen:
                seen[b] = e
    entries = tuple(seen[b] for b in sorted(seen))
    return SingularitySet(r, s, r0, ell_max, m_max, entries)


def singularity_experiment(r, s, r0, ell_max: int, m_max: int, lo=None, hi=None) -> ExperimentReport:
    """Tabulate singular shifts and their density on ``[lo, hi]``."""
    t0, started = time.perf_counter(), _now()
    ss = enumerate_singularity_shifts(r, s, r0, ell_max, m_max)
    lo = -ss.r0 if lo is None else to_fraction(lo)
    hi = lo + 6 if hi is None else to_fraction(hi)
    config = dict(experiment="singularities", r=str(ss.r), s=str(ss.s), r0=str(ss.r0), ell_max=ell_max,
                  m_max=m_max, lo=str(lo), hi=str(hi))
    recs = [dict(ell=e.ell, k=e.k, m=e.m, b=e.b, identity=e.identity_holds(ss.r, ss.s)) for e in ss.entries]
    gap = ss.max_gap(lo, hi)
    agg = {"count": len(recs), "all_identities": all(x["identity"] for x in recs), "max_gap": gap,
           "bound": ss.density_bound(), "density_ok": gap is not None and gap <= ss.density_bound()}
    rep = ExperimentReport("singularities", config, ("ell", "k", "m", "b", "identity"), recs, agg)
    rep.manifest = _manifest("singularities", config, t0, started)
    return rep


# ---------------------------------------------------------------------------
# black boxes


def black_box_experiment(
    dist: WeightDistribution,
    params: BlackBoxParams,
    window: Window,
    targets: Sequence,
    reps: int,
    seed: int,
    *,
    s0_grid: Sequence | None = None,
    delta0_grid: Sequence | None = None,
    spacing: int = 4,
    exact: bool | None = None,
    threads: int = 1,
    stream: int = 12,
) -> ExperimentReport:
    """Black-box frequencies and geodesic crossings over a parameter sweep.

    Boxes are those with corners on ``N Z^d`` inside ``window``; the
    environment is sampled on ``window`` enlarged by the neighbourhood radius
    so every box can be colored. Box statistics are computed once per replica
    and thresholded for each ``(s0, delta0)``, so all sweep points see the
    same environments. ``s0_grid`` and ``delta0_grid`` default to the
    single values in ``params``.
    """
    t0, started = time.perf_counter(), _now()
    targets = _targets(targets)
    N, bounded = params.N, params.bounded
    s0_grid = [params.s0] if s0_grid is None else list(s0_grid)
    delta0_grid = [params.delta0] if delta0_grid is None else list(delta0_grid)
    if bounded is None:
        bounded = math.isfinite(float(dist.ess_sup))
    d = window.d
    R = enlargement_radius(N, d)
    boxes = boxes_in(window, N)
    if not boxes:
        raise ConfigError(f"no {N}-box fits in window {window.spec()}")
    for x in targets:
        if not window.contains(x):
            raise ConfigError(f"target {x} is outside the window")
    outer = Window(tuple(a - R for a in window.lo), tuple(b + R for b in window.hi))
    sweep = [(to_fraction(s0), to_fraction(dl)) for s0 in s0_grid for dl in delta0_grid]
    for s0, dl in sweep:
        BlackBoxParams(N, s0, dl, bounded)
    r0 = dist.ess_inf
    config = dict(experiment="blackbox", dist=dist.spec(), N=N, s0_grid=[str(to_fraction(s)) for s in s0_grid],
                  delta0_grid=[str(to_fraction(x)) for x in delta0_grid], window=window.spec(), targets=targets,
                  reps=reps, seed=seed, bounded=bounded, spacing=spacing, exact=exact, stream=stream)
    origin = (0,) * d

    def one(r):
        env = sample_environment(dist, outer, seed, r, exact=exact, stream=stream)
        stats = [box_statistics(env, bx) for bx in boxes]
        paths = {x: min_length_geodesic(env, origin, x)[1].vertices for x in targets}
        crossed = {x: [crossing(paths[x], bx) is not None for bx in boxes] for x in targets}
        rows = []
        for s0, dl in sweep:
            p = BlackBoxParams(N, s0, dl, bounded)
            black = [is_black(st, p, r0, bounded) for st in stats]
            for x in targets:
                per_class: dict = {}
                nb = 0
                for bx, blk, cr in zip(boxes, black, crossed[x]):
                    if blk and cr:
                        nb += 1
                        c = box_class(bx, spacing)
                        per_class[c] = per_class.get(c, 0) + 1
                rows.append(dict(replica=r, s0=s0, delta0=dl, target=x, boxes=len(boxes), black=sum(black),
                                 crossings=sum(crossed[x]), black_crossings=nb,
                                 max_class_crossings=max(per_class.values(), default=0),
                                 black_crossings_per_l1=Fraction(nb, l1(x))))
        return rows

    records = [row for rows in _map(one, range(reps), threads) for row in rows]
    agg = {"sweep": {}}
    for s0, dl in sweep:
        sel = [row for row in records if row["s0"] == s0 and row["delta0"] == dl and row["target"] == targets[0]]
        k = sum(row["black"] for row in sel)
        n = sum(row["boxes"] for row in sel)
        entry = {"p_black": k / n, "wilson": wilson(k, n)}
        for x in targets:
            rows = [row for row in records if row["s0"] == s0 and row["delta0"] == dl and row["target"] == x]
            entry[f"crossings_per_l1{x}"] = _mean_se([row["black_crossings_per_l1"] for row in rows])
        agg["sweep"][(s0, dl)] = entry
    p = {key: v["p_black"] for key, v in agg["sweep"].items()}
    s0s = sorted({s for s, _ in sweep})
    dls = sorted({x for _, x in sweep})
    agg["monotone_in_s0"] = all(p[(a, dl)] <= p[(b, dl)] for dl in dls for a, b in zip(s0s, s0s[1:]))
    agg["antitone_in_delta0"] = all(p[(s, a)] >= p[(s, b)] for s in s0s for a, b in zip(dls, dls[1:]))
    cols = ("replica", "s0", "delta0", "target", "boxes", "black", "crossings", "black_crossings",
            "max_class_crossings", "black_crossings_per_l1")
    rep = ExperimentReport("blackbox", config, cols, records, agg, exact=bool(dist.atomic) if exact is None else exact)
    rep.manifest = _manifest("blackbox", config, t0, started)
    return rep


# ---------------------------------------------------------------------------
# geodesic lengths against the dual interval


def hw_sandwich_experiment(
    dist: WeightDistribution,
    xi: Sequence,
    b_grid: Sequence,
    n_grid: Sequence[int],
    reps: int,
    seed: int,
    *,
    curve_n: int | None = None,
    curve_reps: int | None = None,
    alpha_max=8,
    alpha_steps: int = 32,
    pad: int | None = None,
    node_budget: int = DEFAULT_NODE_BUDGET,
    threads: int = 1,
    stream: int = 13,
) -> ExperimentReport:
    """Mean ``L_min/n`` and ``L_max/n`` at ``floor(n xi)`` next to the dual interval.

    The interval comes from a radial curve at scale ``curve_n`` (default the
    largest ``n``). The sandwich is checked with three standard errors of
    slack on each side. Atomic laws run in exact arithmetic; continuous laws
    run in floating point, where geodesics are almost surely unique.
    """
    t0, started = time.perf_counter(), _now()
    xi = tuple(to_fraction(c) for c in xi)
    norm = sum(abs(c) for c in xi)
    xi = tuple(c / norm for c in xi)
    bs = [to_fraction(b) for b in b_grid]
    ns = [int(n) for n in n_grid]
    curve_n = max(ns) if curve_n is None else int(curve_n)
    curve_reps = reps if curve_reps is None else int(curve_reps)
    config = dict(experiment="sandwich", dist=dist.spec(), xi=[str(c) for c in xi], b_grid=[str(b) for b in bs],
                  n_grid=ns, reps=reps, seed=seed, curve_n=curve_n, curve_reps=curve_reps,
                  alpha_max=str(to_fraction(alpha_max)), alpha_steps=alpha_steps, pad=pad,
                  node_budget=node_budget, stream=stream)
    grid = make_alpha_grid(alpha_max, alpha_steps)
    curve, _ = build_radial_curve(dist, xi, grid, curve_n, curve_reps, seed, pad=pad, with_zero=False, stream=stream + 1)
    lam = {b: lambda_interval(curve, b) for b in bs}
    records = []
    for n in ns:
        x = tuple(math.floor(n * c) for c in xi)
        p = math.ceil(n / 2) if pad is None else int(pad)
        win = Window.around(x, pad=p)

        def one(r, n=n, x=x, win=win):
            env = sample_environment(dist, win, seed, r, stream=stream)
            rows = []
            for b in bs:
                st = geodesic_stats(shift_environment(env, b), (0,) * len(x), x, node_budget)
                rows.append(dict(replica=r, n=n, b=b, target=x, L_min=st.L_min, L_max=st.L_max, exactness=st.exactness))
            return rows

        records += [row for rows in _map(one, range(reps), threads) for row in rows]
    agg = {"table": {}}
    for n in ns:
        for b in bs:
            sel = [row for row in records if row["n"] == n and row["b"] == b]
            mn, smn = _mean_se([Fraction(row["L_min"], n) for row in sel])
            mx, smx = _mean_se([Fraction(row["L_max"], n) for row in sel])
            lo, hi = float(lam[b].lo), float(lam[b].hi)
            ok = lo - 3 * smn <= mn and mn <= mx and mx <= hi + 3 * smx
            agg["table"][(n, b)] = {"lambda_lo": lo, "mean_L_min": mn, "se_L_min": smn, "mean_L_max": mx,
                                    "se_L_max": smx, "lambda_hi": hi, "sandwich_ok": ok}
    cols = ("replica", "n", "b", "target", "L_min", "L_max", "exactness")
    rep = ExperimentReport("sandwich", config, cols, records, agg, exact=bool(dist.atomic))
    rep.manifest = _manifest("sandwich", config, t0, started)
    return rep
