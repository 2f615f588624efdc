"""Passage times over paths with a prescribed number of steps.

``G[k][x]`` is the least weight of a path of exactly ``k`` unit steps from
the source to ``x`` (vertices and edges may repeat). ``G0[k][x]`` also allows
steps of length zero, which cost nothing, so it is nonincreasing in ``k``.
Both come from a layered Bellman recursion; a missing value is ``INF``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .distributions import WeightDistribution, to_fraction
from .errors import ConfigError, PreconditionError
from .lattice import Environment, Window, l1, reachable, sample_environment

__all__ = [
    "INF",
    "RestrictedField",
    "ShapePointEstimate",
    "TFromGResult",
    "TailBoundResult",
    "ClippingWarning",
    "restricted_passage",
    "restricted_profile",
    "check_G_zero_relation",
    "check_T_from_G",
    "shape_point",
    "estimate_shape",
    "tail_bound_rhs",
    "check_tail_bound",
]

#: value of an unreachable (point, step count) pair
INF = math.inf

_MODES = ("r", "ro", "both")


class ClippingWarning(RuntimeWarning):
    """Some path of at most K steps could have left the window."""


def _mode(mode: str) -> str:
    m = str(mode).lower().replace("°", "o")
    if m not in _MODES:
        raise ConfigError(f"mode must be one of r, ro, both; got {mode!r}")
    return m


def _clipped(window: Window, source: Sequence[int], K: int) -> bool:
    room = min(min(s - a, b - s) for s, a, b in zip(source, window.lo, window.hi))
    return room < K


@dataclass(frozen=True, eq=False)
class RestrictedField:
    """Step-indexed passage times from one source.

    ``G`` / ``G0`` hold raw kernel values of shape ``(K+1, size)`` with
    boolean ``G_reached`` / ``G0_reached``; either pair is ``None`` when the
    mode did not request it. With ``keep_all=False`` only the last layer is
    stored (shape ``(1, size)``).
    """

    env: Environment
    source: tuple
    K: int
    mode: str
    G: np.ndarray | None
    G_reached: np.ndarray | None
    G0: np.ndarray | None
    G0_reached: np.ndarray | None
    clipped: bool
    layers_held: int
    all_layers: bool

    def _layer(self, k: int) -> int:
        if not 0 <= k <= self.K:
            raise PreconditionError(f"step count {k} outside 0..{self.K}")
        if self.all_layers:
            return k
        if k != self.K:
            raise PreconditionError("only the final layer was kept")
        return 0

    def value(self, k: int, x: Sequence[int], zero_steps: bool = False):
        """``G0[k][x]`` if ``zero_steps`` else ``G[k][x]``; ``INF`` when unreachable."""
        vals, rch = (self.G0, self.G0_reached) if zero_steps else (self.G, self.G_reached)
        if vals is None:
            raise PreconditionError(f"field was built in mode {self.mode!r}")
        i = self.env.window.index(x)
        j = self._layer(k)
        if not rch[j, i]:
            return INF
        return self.env.to_value(vals[j, i])

    def table(self, zero_steps: bool = False) -> np.ndarray:
        """Object array ``(layers, *window.shape)`` of values with ``INF`` holes."""
        vals, rch = (self.G0, self.G0_reached) if zero_steps else (self.G, self.G_reached)
        if vals is None:
            raise PreconditionError(f"field was built in mode {self.mode!r}")
        out = np.empty(vals.shape, dtype=object)
        for idx in np.ndindex(vals.shape):
            out[idx] = self.env.to_value(vals[idx]) if rch[idx] else INF
        return out.reshape((vals.shape[0],) + self.env.window.shape)


def restricted_passage(
    env: Environment,
    source: Sequence[int],
    K: int,
    mode: str = "both",
    keep_all: bool = True,
) -> RestrictedField:
    """Tabulate ``G`` and/or ``G0`` for every step count ``0..K``.

    Paths never leave the window; when a ``K``-step path could have, the
    result carries ``clipped=True`` and a :class:`ClippingWarning` is issued.
    Negative weights are allowed.
    """
    mode = _mode(mode)
    K = int(K)
    if K < 0:
        raise PreconditionError("K must be >= 0")
    win = env.window
    source = tuple(int(c) for c in source)
    s = win.index(source)
    clipped = _clipped(win, source, K)
    if clipped:
        warnings.warn(
            f"window {win.spec()} is narrower than {K} steps around {source}; values may be clipped",
            ClippingWarning,
            stacklevel=2,
        )
    parts = {}
    held = 0
    for zero in (False, True):
        if (mode == "r" and zero) or (mode == "ro" and not zero):
            continue
        vals, rch, _, _, layers = kernels.restricted_dp(env.flat, win.shape, s, K, zero, keep_all, -1)
        if not keep_all:
            vals, rch = vals[None, :], rch[None, :]
        rch = rch.astype(bool)
        vals.setflags(write=False)
        rch.setflags(write=False)
        parts[zero] = (vals, rch)
        held = max(held, layers)
    g = parts.get(False, (None, None))
    g0 = parts.get(True, (None, None))
    return RestrictedField(env, source, K, mode, g[0], g[1], g0[0], g0[1], clipped, held, keep_all)


def restricted_profile(env: Environment, source, target, K: int, zero_steps: bool):
    """``G[k][target]`` (or ``G0``) for k = 0..K from a single target-pruned pass.

    Returns (raw values, reached mask), both of length ``K+1``.
    """
    win = env.window
    s, x = win.index(source), win.index(target)
    _, _, tv, tr, _ = kernels.restricted_dp(env.flat, win.shape, s, int(K), bool(zero_steps), False, x)
    return tv, tr.astype(bool)


def check_G_zero_relation(field: RestrictedField) -> bool:
    """``G0[n][x] == min over |x|_1 <= k <= n of G[k][x]`` for every n and x."""
    if field.mode != "both" or not field.all_layers:
        raise PreconditionError("need a field with both modes and all layers")
    win = field.env.window
    dist = np.abs(win.coords() - np.array(field.source)).sum(axis=1)
    big = np.iinfo(np.int64).max if field.G.dtype == np.int64 else np.inf
    g = np.where(field.G_reached, field.G, big)
    ks = np.arange(field.K + 1)[:, None]
    g = np.where(ks >= dist[None, :], g, big)
    run = np.minimum.accumulate(g, axis=0)
    run_reached = np.logical_or.accumulate(field.G_reached & (ks >= dist[None, :]), axis=0)
    if not np.array_equal(run_reached, field.G0_reached):
        return False
    return bool(np.array_equal(np.where(run_reached, run, 0), np.where(field.G0_reached, field.G0, 0)))


@dataclass(frozen=True)
class TFromGResult:
    """Outcome of comparing passage times with zero-step restricted times.

    ``status`` is ``"pass"``, ``"fail"`` or ``"inconclusive"`` (the step
    budget is below the longest geodesic for some tested point).
    """

    status: str
    checked: int
    short: tuple
    mismatches: tuple

    def __bool__(self):
        return self.status == "pass"


def check_T_from_G(env: Environment, field: RestrictedField, pf, targets=None, l_max=None) -> TFromGResult:
    """``T(0, x) == min_{k<=K} G0[k][x] == G0[K][x]`` for points whose longest geodesic fits in K steps.

    Args:
        pf: passage field from the same source (standard module).
        targets: points to test; default every window point.
        l_max: optional mapping point -> longest geodesic length; computed
            when omitted.
    """
    from .standard import geodesic_stats

    env.require_nonnegative()
    if field.G0 is None or not field.all_layers:
        raise PreconditionError("need a field with zero-step values and all layers")
    if tuple(pf.source) != tuple(field.source):
        raise PreconditionError("passage field and restricted field have different sources")
    win = env.window
    pts = [win.point(i) for i in range(win.size)] if targets is None else [tuple(t) for t in targets]
    short, bad = [], []
    checked = 0
    for x in pts:
        lm = l_max[x] if l_max is not None else geodesic_stats(env, field.source, x).L_max
        if lm > field.K:
            short.append(x)
            continue
        checked += 1
        i = win.index(x)
        col = np.where(field.G0_reached[:, i], field.G0[:, i], np.inf if field.G0.dtype != np.int64 else np.iinfo(np.int64).max)
        T = pf.raw[i]
        if not (field.G0_reached[field.K, i] and col.min() == T and field.G0[field.K, i] == T):
            bad.append(x)
    status = "fail" if bad else ("inconclusive" if short else "pass")
    return TFromGResult(status, checked, tuple(short), tuple(bad))


# ---------------------------------------------------------------------------
# shape estimation


@dataclass(frozen=True)
class ShapePointEstimate:
    xi: tuple
    alpha: object
    n: int
    k_n: int
    x_n: tuple
    mode: str
    value_hat: float
    stderr: float
    reps: int
    samples: tuple = ()


def _round_half_away(q: Fraction) -> int:
    f = math.floor(abs(q) + Fraction(1, 2))
    return f if q >= 0 else -f


def shape_point(xi: Sequence, alpha, n: int, mode: str = "r") -> tuple[int, tuple]:
    """Lattice point ``x_n`` and step count ``k_n`` for direction ``xi`` at scale ``n``.

    ``x_n`` rounds ``n*xi`` coordinatewise; ``k_n = floor(n*alpha)``, raised by
    one when the parity is wrong in mode ``r``. When rounding pushes ``x_n``
    out of reach its last nonzero coordinate is moved toward zero.
    """
    xi = tuple(to_fraction(c) for c in xi)
    alpha = to_fraction(alpha)
    x = [_round_half_away(n * c) for c in xi]
    k = math.floor(n * alpha)
    while l1(x) > k:
        j = max(i for i, c in enumerate(x) if c != 0)
        x[j] -= 1 if x[j] > 0 else -1
    if mode == "r" and (k - l1(x)) % 2:
        k += 1
    return k, tuple(x)


def _is_axis(xi) -> bool:
    return sum(1 for c in xi if c != 0) == 1


def estimate_shape(
    dist: WeightDistribution,
    xi: Sequence,
    alpha,
    n: int,
    reps: int,
    seed: int,
    mode: str = "r",
    *,
    pad: int | None = None,
    exact: bool | None = None,
    stream: int = 1,
) -> ShapePointEstimate:
    """Monte Carlo estimate of ``lim G_{0,(k_n),x_n} / n`` (or its zero-step version).

    Each replica samples a fresh environment on a box around ``0`` and
    ``x_n`` padded by ``pad`` (default ``ceil(n/2)``) and runs one
    target-pruned recursion. ``alpha`` must exceed ``|xi|_1``; equality is
    accepted only along a coordinate axis, where the single straight path
    makes the value a plain sum of weights.
    """
    mode = _mode(mode)
    if mode == "both":
        raise ConfigError("estimate_shape needs mode r or ro")
    xi = tuple(to_fraction(c) for c in xi)
    alpha = to_fraction(alpha)
    norm = sum(abs(c) for c in xi)
    if alpha < norm or (alpha == norm and not _is_axis(xi)):
        raise ConfigError(f"alpha={alpha} must exceed |xi|_1={norm}")
    if n < 1 or reps < 1:
        raise ConfigError("n and reps must be >= 1")
    k, x = shape_point(xi, alpha, n, mode)
    pad = math.ceil(n / 2) if pad is None else int(pad)
    win = Window.around(x, pad=pad)
    vals = []
    for r in range(reps):
        env = sample_environment(dist, win, seed, r, exact=exact, stream=stream)
        tv, tr = restricted_profile(env, (0,) * len(x), x, k, mode == "ro")
        vals.append(env.to_value(tv[k]) / n if tr[k] else INF)
    fv = np.array([float(v) for v in vals])
    mean = float(fv.mean())
    se = float(fv.std(ddof=1) / math.sqrt(reps)) if reps > 1 and np.ptp(fv) > 0 else 0.0
    return ShapePointEstimate(xi, alpha, n, k, x, mode, mean, se, reps, tuple(vals))


# ---------------------------------------------------------------------------
# tail bound


@dataclass(frozen=True)
class TailBoundResult:
    lhs_freq: float
    rhs_bound: float
    stderr: float
    ok: bool
    hits: int
    reps: int


def tail_bound_rhs(dist: WeightDistribution, ell: int, d: int, s) -> float:
    """``ell**(2d) * P{t >= s/ell}**(2d)``, exact for atomic laws."""
    if dist.atomic:
        thr = to_fraction(s) / ell
        p = sum((q for v, q in dist.atoms() if v >= thr), Fraction(0))
        return float(Fraction(ell) ** (2 * d) * p ** (2 * d))
    p = dist.sf(float(to_fraction(s)) / ell)
    return float(ell) ** (2 * d) * p ** (2 * d)


def check_tail_bound(dist: WeightDistribution, ell: int, x: Sequence[int], s, reps: int, seed: int, *, stream: int = 3) -> TailBoundResult:
    """Empirical ``P{G0_{0,(ell),x} >= s}`` against its analytic bound.

    Each replica samples the box of half-width ``ell`` around the origin, so
    no path of ``ell`` steps is clipped.
    """
    x = tuple(int(c) for c in x)
    d = len(x)
    if ell - l1(x) < 8:
        raise PreconditionError(f"need ell - |x|_1 >= 8, got {ell - l1(x)}")
    win = Window.centered(*([ell] * d))
    hits = 0
    for r in range(reps):
        env = sample_environment(dist, win, seed, r, stream=stream)
        tv, tr = restricted_profile(env, (0,) * d, x, ell, True)
        if env.to_value(tv[ell]) >= (to_fraction(s) if env.exact else float(to_fraction(s))):
            hits += 1
    f = hits / reps
    se = math.sqrt(f * (1 - f) / reps)
    rhs = tail_bound_rhs(dist, ell, d, s)
    return TailBoundResult(f, rhs, se, f <= rhs + 4 * se, hits, reps)
