"""Shift/length duality for shape functions.

A radial curve tabulates ``alpha -> alpha * g(xi / alpha)`` (the limit of
``G_{0,(k),x}/n`` with ``k ~ n*alpha``). Taking ``min over alpha`` of
``value + alpha*b`` gives the shape function of the shifted weights; the
minimizing ``alpha`` range is the superdifferential of the shift curve.

Transforms on curves run in exact rational arithmetic (curve values are
converted from their float means exactly), so the concavity and
monotonicity guarantees hold with zero tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .distributions import WeightDistribution, to_fraction
from .errors import ConfigError, PreconditionError
from .lattice import Window, sample_environment, shift_environment
from .restricted import restricted_profile, shape_point
from .standard import passage_times

__all__ = [
    "RadialCurve",
    "ShiftCurve",
    "SuperdiffInterval",
    "DetourParams",
    "alpha_grid",
    "build_radial_curve",
    "mu_from_g",
    "dual_shift_curve",
    "direct_shift_curve",
    "lambda_interval",
    "zgpp_from_g",
    "difference_quotients",
    "check_strict_concavity",
    "check_derivative_limit",
    "trichotomy_report",
    "find_detour_params",
    "TRICHOTOMY_LABELS",
]


@dataclass(frozen=True, eq=False)
class RadialCurve:
    """Estimates of ``alpha * g(xi/alpha)`` on an increasing grid.

    Attributes:
        alphas: effective ratios ``k/n`` (Fractions), strictly increasing.
        ks: step counts behind each grid point.
        values, stderrs: means and standard errors (floats).
        samples: per-replica values, shape ``(reps, len(alphas))``.
        kind: ``"g"`` or ``"g0"``.
        r0: essential infimum of the weight law (lower end of valid shifts).
        boundary: extrapolated value at ``alpha = 1`` and its method tag.
    """

    xi: tuple
    alphas: tuple
    ks: tuple
    values: np.ndarray
    stderrs: np.ndarray
    n: int
    reps: int
    kind: str = "g"
    r0: object = 0
    samples: np.ndarray | None = field(default=None, repr=False)
    boundary: float | None = None
    boundary_method: str = "linear-2pt"

    def __post_init__(self):
        if len(self.alphas) == 0:
            raise PreconditionError("empty curve")
        if any(b <= a for a, b in zip(self.alphas, self.alphas[1:])):
            raise PreconditionError("alpha grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise PreconditionError("curve has non-finite values")

    def __len__(self):
        return len(self.alphas)


@dataclass(frozen=True, eq=False)
class ShiftCurve:
    """``b -> mu_xi(b)`` on an increasing grid, direct or reconstructed."""

    xi: tuple
    b_grid: tuple
    mu_values: tuple
    stderrs: tuple
    provenance: str
    n: int | None = None
    reps: int | None = None
    samples: np.ndarray | None = field(default=None, repr=False)
    mean_weight: float | None = None


@dataclass(frozen=True)
class SuperdiffInterval:
    b: object
    lo: object
    hi: object


@dataclass(frozen=True)
class DetourParams:
    r: Fraction
    s: Fraction
    b: Fraction
    k: int
    ell: int
    delta: Fraction

    def holds(self) -> bool:
        k, l2, r, s, b, dl = self.k, 2 * self.ell, self.r, self.s, self.b, self.delta
        return k * (s + dl) < (k + l2) * (r - dl) < (k + l2) * (r + dl) < k * (s - dl) + (l2 - 1) * b


def _normalize(xi) -> tuple:
    xi = tuple(to_fraction(c) for c in xi)
    norm = sum(abs(c) for c in xi)
    if norm == 0:
        raise ConfigError("direction must be nonzero")
    return tuple(c / norm for c in xi)


def alpha_grid(a_max, steps: int, a_min=None, knee=2) -> list[Fraction]:
    """Grid on ``(1, a_max]``: geometric in ``alpha - 1`` up to ``knee``, linear after.

    Values are rounded to 1/1000 to keep them readable in output files.
    """
    a_max = float(a_max)
    a_min = 1.02 if a_min is None else float(a_min)
    if not 1 < a_min < a_max or steps < 2:
        raise ConfigError("need 1 < a_min < a_max and steps >= 2")
    knee = min(float(knee), a_max)
    n_geo = max(1, steps // 2) if knee > a_min else 0
    pts = []
    if n_geo:
        pts += list(1 + np.geomspace(a_min - 1, knee - 1, n_geo, endpoint=False))
    pts += list(np.linspace(knee if n_geo else a_min, a_max, steps - n_geo))
    out = sorted({Fraction(round(p * 1000), 1000) for p in pts})
    return out


def build_radial_curve(
    dist: WeightDistribution,
    xi: Sequence,
    alpha_grid: Sequence,
    n: int,
    reps: int,
    seed: int,
    *,
    pad: int | None = None,
    exact: bool | None = None,
    stream: int = 1,
    with_zero: bool = True,
):
    """Radial curves of ``G`` (and ``G0``) along ``xi`` at scale ``n``.

    All grid points share the target ``x_n`` and the replicas, so each replica
    costs one target-pruned recursion per curve. Grid values that round to
    the same step count are merged; ``alphas`` are the effective ``k/n``.

    Returns:
        ``(g_curve, g0_curve)``; the second is ``None`` unless ``with_zero``.
    """
    xi = _normalize(xi)
    grid = sorted(to_fraction(a) for a in alpha_grid)
    if not grid or grid[0] <= 1:
        raise ConfigError("alpha grid must lie in (1, inf)")
    pts = [shape_point(xi, a, n, "r") for a in grid]
    xs = {x for _, x in pts}
    if len(xs) != 1:  # pragma: no cover - only when a grid point is at |xi|_1
        raise ConfigError("grid too close to 1 for this n")
    x = xs.pop()
    ks = sorted({k for k, _ in pts})
    K = ks[-1]
    pad = math.ceil(n / 2) if pad is None else int(pad)
    win = Window.around(x, pad=pad)
    origin = (0,) * len(x)
    g = np.empty((reps, len(ks)))
    g0 = np.empty((reps, len(ks))) if with_zero else None
    for r in range(reps):
        env = sample_environment(dist, win, seed, r, exact=exact, stream=stream)
        tv, tr = restricted_profile(env, origin, x, K, False)
        if not tr[ks].all():  # pragma: no cover
            raise PreconditionError("target unreachable at some grid step count")
        g[r] = [float(env.to_value(tv[k])) / n for k in ks]
        if with_zero:
            tv, tr = restricted_profile(env, origin, x, K, True)
            g0[r] = [float(env.to_value(tv[k])) / n for k in ks]
    alphas = tuple(Fraction(k, n) for k in ks)
    r0 = dist.ess_inf

    def curve(m, kind):
        vals = m.mean(axis=0)
        se = _stderr(m)
        bnd = None
        if len(ks) >= 2:
            a0, a1 = float(alphas[0]), float(alphas[1])
            bnd = float(vals[0] + (1 - a0) * (vals[1] - vals[0]) / (a1 - a0))
        return RadialCurve(xi, alphas, tuple(ks), vals, se, n, reps, kind, r0, m, bnd)

    return curve(g, "g"), (curve(g0, "g0") if with_zero else None)


def _stderr(m: np.ndarray) -> np.ndarray:
    """Column standard errors; exactly zero for constant columns."""
    reps = m.shape[0]
    if reps < 2:
        return np.zeros(m.shape[1])
    se = m.std(axis=0, ddof=1) / math.sqrt(reps)
    return np.where(np.ptp(m, axis=0) == 0, 0.0, se)


def _check_b(curve, b) -> Fraction:
    b = to_fraction(b)
    if b < -to_fraction(curve.r0):
        raise PreconditionError(f"shift {b} is below -ess inf = {-to_fraction(curve.r0)}")
    return b


def _affine(curve: RadialCurve, b: Fraction) -> list[Fraction]:
    return [Fraction(float(v)) + a * b for v, a in zip(curve.values, curve.alphas)]


def mu_from_g(curve: RadialCurve, b) -> Fraction:
    """``min over the grid of value + alpha*b`` in exact arithmetic."""
    if len(curve) == 0:
        raise PreconditionError("empty curve")
    b = _check_b(curve, b)
    return min(_affine(curve, b))


def _argmin_index(curve, b) -> int:
    vals = _affine(curve, to_fraction(b))
    return vals.index(min(vals))


def dual_shift_curve(curve: RadialCurve, b_grid: Sequence) -> ShiftCurve:
    """Shift curve reconstructed from a radial curve.

    The standard error at each ``b`` is that of the minimizing grid point.
    """
    bs = sorted(to_fraction(b) for b in b_grid)
    mus = tuple(mu_from_g(curve, b) for b in bs)
    ses = tuple(float(curve.stderrs[_argmin_index(curve, b)]) for b in bs)
    return ShiftCurve(curve.xi, tuple(bs), mus, ses, "dual", curve.n, curve.reps)


def direct_shift_curve(
    dist: WeightDistribution,
    xi: Sequence,
    b_grid: Sequence,
    n: int,
    reps: int,
    seed: int,
    *,
    pad: int | None = None,
    exact: bool | None = None,
    stream: int = 2,
) -> ShiftCurve:
    """``T^(b)(0, x_n) / n`` averaged over replicas, for each shift ``b``.

    Every replica is reused across the whole ``b`` grid (common random
    numbers), so differences in ``b`` are much less noisy than the levels.
    """
    xi = _normalize(xi)
    bs = sorted(to_fraction(b) for b in b_grid)
    r0 = to_fraction(dist.ess_inf)
    if bs[0] < -r0:
        raise PreconditionError(f"shift {bs[0]} is below -ess inf = {-r0}")
    _, x = shape_point(xi, 2, n, "ro")
    pad = math.ceil(n / 2) if pad is None else int(pad)
    win = Window.around(x, pad=pad)
    origin = (0,) * len(x)
    m = np.empty((reps, len(bs)))
    for r in range(reps):
        env = sample_environment(dist, win, seed, r, exact=exact, stream=stream)
        for j, b in enumerate(bs):
            e = shift_environment(env, b if env.exact else float(b))
            m[r, j] = float(passage_times(e, origin, stop=x).time(x)) / n
    se = _stderr(m)
    return ShiftCurve(xi, tuple(bs), tuple(m.mean(axis=0)), tuple(se), "direct", n, reps, m, float(dist.mean))


def lambda_interval(curve: RadialCurve, b, slack=None) -> SuperdiffInterval:
    """Grid ``alpha`` range whose ``value + alpha*b`` is within ``slack`` of the minimum.

    ``slack=None`` uses twice each point's own standard error.
    """
    b = _check_b(curve, b)
    vals = _affine(curve, b)
    best = min(vals)
    if slack is None:
        tol = [2 * Fraction(float(s)) for s in curve.stderrs]
    else:
        tol = [to_fraction(slack)] * len(vals)
    inside = [a for a, v, t in zip(curve.alphas, vals, tol) if v - best <= t]
    return SuperdiffInterval(b, min(inside), max(inside))


def zgpp_from_g(curve: RadialCurve) -> RadialCurve:
    """Zero-step curve from a plain one: running minimum over the grid."""
    vals = np.minimum.accumulate(np.asarray(curve.values, dtype=float))
    idx = [0]
    for i in range(1, len(vals)):
        idx.append(i if curve.values[i] <= vals[i - 1] else idx[-1])
    se = np.asarray(curve.stderrs)[idx]
    return RadialCurve(curve.xi, curve.alphas, curve.ks, vals, se, curve.n, curve.reps, "g0", curve.r0, None, curve.boundary, curve.boundary_method)


# ---------------------------------------------------------------------------
# checks on shift curves


def difference_quotients(sc: ShiftCurve):
    """Successive quotients and their standard errors.

    The errors combine the two endpoint errors as if independent, which is
    conservative under common random numbers.
    """
    bs = [float(b) for b in sc.b_grid]
    mu = [float(m) for m in sc.mu_values]
    se = list(sc.stderrs)
    q, qse = [], []
    for j in range(len(bs) - 1):
        h = bs[j + 1] - bs[j]
        q.append((mu[j + 1] - mu[j]) / h)
        qse.append(math.hypot(se[j + 1], se[j]) / h)
    return q, qse


def check_strict_concavity(sc: ShiftCurve) -> dict:
    """Concavity and strict concavity of a directly estimated shift curve.

    Concavity passes when no quotient rises above its predecessor by more
    than three combined standard errors. Strictness passes when the first
    quotient exceeds the last by at least three combined standard errors.
    """
    if sc.provenance != "direct":
        raise PreconditionError("dual curves are concave by construction; strict concavity is tested on direct curves")
    if len(sc.b_grid) < 3:
        raise PreconditionError("need at least 3 shifts")
    q, qse = difference_quotients(sc)
    rises = [q[j + 1] - q[j] for j in range(len(q) - 1)]
    tols = [3 * math.hypot(qse[j + 1], qse[j]) for j in range(len(q) - 1)]
    max_violation = max(0.0, *(r - t for r, t in zip(rises, tols)))
    drop = q[0] - q[-1]
    drop_se = math.hypot(qse[0], qse[-1])
    return {
        "quotients": q,
        "quotient_stderrs": qse,
        "max_violation": max_violation,
        "concave": max_violation == 0.0,
        "drop": drop,
        "drop_stderr": drop_se,
        "strict": drop >= 3 * drop_se and drop > 0,
    }


def check_derivative_limit(sc: ShiftCurve, mean_weight=None) -> dict:
    """Last difference quotient against the large-shift slope ``|xi|_1 = 1``.

    Inconclusive unless the grid reaches ``8 * E[t]``. Passes when the last
    quotient is within three standard errors plus the change between the last
    two quotients (a grid-resolution term) of 1.
    """
    m = sc.mean_weight if mean_weight is None else float(mean_weight)
    q, qse = difference_quotients(sc)
    out = {"last_quotient": q[-1], "distance": q[-1] - 1.0, "stderr": qse[-1], "min_quotient": min(q)}
    if m is None or float(sc.b_grid[-1]) < 8 * m or len(q) < 2:
        out.update(status="inconclusive", ok=None)
        return out
    res = abs(q[-1] - q[-2])
    ok = abs(q[-1] - 1.0) <= 3 * qse[-1] + res
    out.update(status="pass" if ok else "fail", ok=ok, resolution=res)
    return out


TRICHOTOMY_LABELS = ("decreasing-agree", "flat-agree", "g-rises-g0-flat")


def trichotomy_report(g_curve: RadialCurve, g0_curve: RadialCurve, mu_hat, slack=None) -> dict:
    """Label each grid point by how ``alpha*g``, ``alpha*g0`` and ``mu`` compare.

    Labels: ``decreasing-agree`` (both curves agree above ``mu``),
    ``flat-agree`` (both at ``mu``), ``g-rises-g0-flat`` (``g0`` at ``mu``,
    ``g`` above), ``unresolved`` otherwise. Scanned in increasing ``alpha`` the
    labels must run through the first three in order.
    """
    if tuple(g_curve.alphas) != tuple(g0_curve.alphas):
        raise PreconditionError("curves must share the alpha grid")
    mu = float(mu_hat)
    labels = []
    for i in range(len(g_curve)):
        g, g0 = float(g_curve.values[i]), float(g0_curve.values[i])
        if slack is None:
            tol = 2 * math.hypot(float(g_curve.stderrs[i]), float(g0_curve.stderrs[i]))
        else:
            tol = float(slack)
        agree = abs(g - g0) <= tol
        g0_flat = abs(g0 - mu) <= tol
        if agree and g0_flat:
            labels.append("flat-agree")
        elif agree and g0 > mu:
            labels.append("decreasing-agree")
        elif g0_flat and g > g0:
            labels.append("g-rises-g0-flat")
        else:
            labels.append("unresolved")
    rank = {lab: i for i, lab in enumerate(TRICHOTOMY_LABELS)}
    ok = all(lab in rank for lab in labels) and all(rank[a] <= rank[b] for a, b in zip(labels, labels[1:]))
    return {"alphas": list(g_curve.alphas), "labels": labels, "pattern_ok": ok, "mu": mu}


# ---------------------------------------------------------------------------
# detour parameters


def find_detour_params(r, s, b, k_min: int = 1, bound: int = 10**6) -> DetourParams:
    """Smallest ``(k, ell)`` (``k`` first) with ``ks < (k+2ell) r < ks + (2ell-1) b``.

    For each ``k`` the least admissible ``ell`` is solved in closed form and
    checked exactly; a slack ``delta`` certifying the widened chain is
    attached.

    Raises:
        PreconditionError: bad inputs, or nothing found with ``k <= bound``.
    """
    r, s, b = to_fraction(r), to_fraction(s), to_fraction(b)
    if not (0 < r < s and b > 0):
        raise PreconditionError("need 0 < r < s and b > 0")
    for k in range(max(1, int(k_min)), bound + 1):
        ell = math.floor(k * (s - r) / (2 * r)) + 1
        if r < b:
            ell = max(ell, math.floor((b - k * (s - r)) / (2 * (b - r))) + 1)
        ell = max(ell, 1)
        if k * s < (k + 2 * ell) * r < k * s + (2 * ell - 1) * b:
            m1 = (k + 2 * ell) * r - k * s
            m2 = k * s + (2 * ell - 1) * b - (k + 2 * ell) * r
            delta = min(m1, m2) / (2 * (2 * k + 2 * ell))
            delta = min(delta, r / 2)
            p = DetourParams(r, s, b, k, ell, delta)
            if not p.holds():  # pragma: no cover
                raise AssertionError("detour certificate failed")
            return p
    raise PreconditionError(f"no detour parameters with k <= {bound}")
