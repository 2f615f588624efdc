"""N-boxes, their black coloring, and crossings of boxes by paths.

An N-box has extent ``N`` along one axis (its orientation) and ``3N`` along
the others, endpoints included. Boxes are taken with corners on ``N Z^d``,
which is the family cut out by the overlapping ``3N``-cubes
``N k + [-N, 2N]^d``. A box is black when its edge weights are capped
(per edge for bounded laws, in total for unbounded ones) and every path
inside its enlargement is slower than ``(r0 + delta0)`` per unit of
l1 distance between its endpoints, over endpoint pairs at distance ``>= N``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .distributions import to_fraction
from .errors import ConfigError
from .lattice import Environment, Window

__all__ = [
    "BlackBoxParams",
    "Box",
    "boxes_in",
    "box_class",
    "enlargement_radius",
    "region_min_ratio",
    "box_statistics",
    "is_black",
    "crossing",
]


@dataclass(frozen=True)
class BlackBoxParams:
    """Coloring parameters.

    Attributes:
        N: box scale.
        s0: weight cap (per edge when ``bounded``, box total otherwise).
        delta0: margin above the essential infimum.
        bounded: which cap applies; ``None`` picks by the law's ess sup.
    """

    N: int
    s0: float
    delta0: float
    bounded: bool | None = None

    def __post_init__(self):
        if self.N < 1:
            raise ConfigError("N must be >= 1")
        if not self.s0 > 0 or not self.delta0 > 0:
            raise ConfigError("s0 and delta0 must be > 0")


@dataclass(frozen=True)
class Box:
    corner: tuple
    axis: int
    N: int

    @property
    def lo(self) -> tuple:
        return self.corner

    @property
    def hi(self) -> tuple:
        return tuple(c + (self.N if i == self.axis else 3 * self.N) for i, c in enumerate(self.corner))

    def contains(self, x: Sequence[int]) -> bool:
        return all(a <= c <= b for a, c, b in zip(self.lo, x, self.hi))

    def face(self, x: Sequence[int]) -> int:
        """0 on the lower large face, 1 on the upper one, -1 otherwise."""
        c = x[self.axis]
        if c == self.corner[self.axis]:
            return 0
        if c == self.corner[self.axis] + self.N:
            return 1
        return -1


def enlargement_radius(N: int, d: int) -> int:
    """l1 radius of the neighbourhood in which paths are examined."""
    return 3 * N * (d - 1) + N


def boxes_in(window: Window, N: int, margin: int = 0) -> list[Box]:
    """All boxes with corners on ``N Z^d`` lying in ``window`` shrunk by ``margin``."""
    d = window.d
    out = []
    for axis in range(d):
        ext = [N if i == axis else 3 * N for i in range(d)]
        ranges = []
        for i in range(d):
            lo = math.ceil((window.lo[i] + margin) / N)
            hi = math.floor((window.hi[i] - margin - ext[i]) / N)
            ranges.append(range(lo, hi + 1))
        for k in itertools.product(*ranges):
            out.append(Box(tuple(N * c for c in k), axis, N))
    return out


def box_class(box: Box, spacing: int = 4) -> tuple:
    """Residue class of a box; boxes in one class are at least ``N`` apart when ``spacing >= 4``."""
    return (box.axis,) + tuple((c // box.N) % spacing for c in box.corner)


def _crop(env: Environment, lo, hi):
    win = env.window
    sl = tuple(slice(a - w, b - w + 1) for a, b, w in zip(lo, hi, win.lo))
    W = env.weights.reshape((win.d,) + win.shape)[(slice(None),) + sl]
    shape = tuple(b - a + 1 for a, b in zip(lo, hi))
    return np.ascontiguousarray(W.reshape(win.d, -1)).reshape(-1), shape


def region_min_ratio(env: Environment, lo, hi, mask: np.ndarray, N: int) -> float:
    """``min T_R(x, y) / |y - x|_1`` over ``x, y`` in region ``R`` with ``|y - x|_1 >= N``.

    ``R`` is given by a boolean ``mask`` over the box ``lo..hi`` of the
    window; ``T_R`` is the passage time over paths staying in ``R``. With
    nonnegative weights the minimum over all self-avoiding paths in ``R``
    between two points equals ``T_R``, so this decides the path condition
    exactly. Returns ``inf`` when no pair is far enough apart.
    """
    env.require_nonnegative()
    W, shape = _crop(env, lo, hi)
    allowed = np.ascontiguousarray(mask.reshape(-1), dtype=np.uint8)
    grids = np.meshgrid(*(np.arange(s) for s in shape), indexing="ij")
    coords = np.stack([g.reshape(-1) for g in grids], axis=1)
    idx = np.nonzero(allowed)[0]
    best = math.inf
    for s in idx:
        time, _, settled = kernels.dijkstra_heap(W, shape, int(s), -1, allowed)
        dist = np.abs(coords - coords[s]).sum(axis=1)
        # each unordered pair once
        far = (dist >= N) & settled.astype(bool) & (np.arange(len(dist)) > s)
        if far.any():
            t, dd = time[far], dist[far]
            q = t / dd
            m = q.min()
            if env.exact:
                # settle near-ties exactly
                near = np.nonzero(q <= m + abs(m) * 1e-12)[0]
                r = min(Fraction(int(t[i]), int(dd[i]) * env.denom) for i in near)
            else:
                r = float(m)
            best = r if best is math.inf else min(best, r)
    return best


def _enlarged(box: Box, d: int):
    R = enlargement_radius(box.N, d)
    lo = tuple(a - R for a in box.lo)
    hi = tuple(b + R for b in box.hi)
    shape = tuple(b - a + 1 for a, b in zip(lo, hi))
    grids = np.meshgrid(*(np.arange(a, b + 1) for a, b in zip(lo, hi)), indexing="ij")
    gap = sum(np.maximum(0, np.maximum(box.lo[i] - grids[i], grids[i] - box.hi[i])) for i in range(d))
    return lo, hi, gap <= R


def box_statistics(env: Environment, box: Box) -> dict:
    """Max and sum of edge weights inside ``box`` and the min path ratio over its enlargement."""
    d = env.d
    lo, hi, mask = _enlarged(box, d)
    if not (env.window.contains(lo) and env.window.contains(hi)):
        raise ConfigError(f"enlarged box {lo}..{hi} does not fit in window {env.window.spec()}")
    W, shape = _crop(env, box.lo, box.hi)
    Wd = W.reshape((d,) + shape)
    inner = []
    for i in range(d):
        sl = tuple(slice(0, s - 1) if j == i else slice(None) for j, s in enumerate(shape))
        inner.append(Wd[i][sl].reshape(-1))
    w = np.concatenate(inner)
    return {
        "max_w": env.to_value(w.max()),
        "sum_w": env.to_value(w.sum()),
        "min_ratio": region_min_ratio(env, lo, hi, mask, box.N),
    }


def is_black(stats: dict, params: BlackBoxParams, r0, bounded: bool) -> bool:
    """Apply the cap and margin conditions to precomputed box statistics."""
    cap = stats["max_w"] if bounded else stats["sum_w"]
    ratio = stats["min_ratio"]
    if isinstance(cap, Fraction):
        s0, thr = to_fraction(params.s0), to_fraction(r0) + to_fraction(params.delta0)
    else:
        s0, thr = float(params.s0), float(r0) + float(params.delta0)
    return cap <= s0 and ratio > thr


def crossing(path: Sequence[Sequence[int]], box: Box):
    """``(v, w)`` when ``path`` crosses ``box``, else ``None``.

    A crossing needs a stretch of consecutive path vertices inside the box
    that touches both large faces, and neither path endpoint in the box.
    ``v`` is the first path vertex in the box and ``w`` the last.
    """
    path = [tuple(p) for p in path]
    if not path or box.contains(path[0]) or box.contains(path[-1]):
        return None
    inside = [box.contains(p) for p in path]
    crossed = False
    i = 0
    while i < len(path) and not crossed:
        if inside[i]:
            faces = set()
            j = i
            while j < len(path) and inside[j]:
                f = box.face(path[j])
                if f >= 0:
                    faces.add(f)
                j += 1
            crossed = len(faces) == 2
            i = j
        else:
            i += 1
    if not crossed:
        return None
    first = inside.index(True)
    last = len(inside) - 1 - inside[::-1].index(True)
    return path[first], path[last]
