"""Lattice geometry, environments and reachability on finite windows of Z^d.

Edge weights are stored densely: ``weights[i, v]`` is the weight of the edge
``{v, v + e_i}`` where ``v`` is a flat (C-order) vertex index of the window.
Slots whose ``v + e_i`` falls outside the window are unused and hold 0.

In exact mode weights are int64 numerators over ``Environment.denom``; in float
mode they are float64 and ``denom`` is 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .distributions import WeightDistribution, to_fraction
from .errors import ConfigError, NegativeWeightError, PreconditionError

__all__ = [
    "l1",
    "steps",
    "canonical_edge",
    "reachable",
    "Window",
    "Environment",
    "sample_environment",
    "shift_environment",
    "parse_window",
]

Point = tuple


def l1(x: Sequence[int]) -> int:
    return sum(abs(int(c)) for c in x)


def steps(d: int) -> list[tuple[int, ...]]:
    """Unit steps in the order e1, -e1, e2, -e2, ..."""
    out = []
    for i in range(d):
        for s in (1, -1):
            z = [0] * d
            z[i] = s
            out.append(tuple(z))
    return out


def canonical_edge(u: Sequence[int], v: Sequence[int]) -> tuple[Point, Point]:
    """Unordered nearest-neighbour edge with the lexicographically smaller end first."""
    u, v = tuple(int(c) for c in u), tuple(int(c) for c in v)
    if len(u) != len(v) or sum(abs(a - b) for a, b in zip(u, v)) != 1:
        raise ValueError(f"{u} and {v} are not nearest neighbours")
    return (u, v) if u < v else (v, u)


def reachable(x: Sequence[int], n: int, mode: str = "r") -> bool:
    """Whether an admissible ``n``-step path leads from the origin to ``x``.

    ``mode="r"`` uses the unit steps only (parity matters); ``mode="ro"`` also
    allows the zero step.
    """
    if n < 0:
        raise ValueError("hop count must be >= 0")
    dist = l1(x)
    if mode == "r":
        return n >= dist and (n - dist) % 2 == 0
    if mode == "ro":
        return n >= dist
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class Window:
    """Axis-aligned box ``lo <= x <= hi`` of Z^d containing the origin."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(int(c) for c in self.lo)
        hi = tuple(int(c) for c in self.hi)
        if len(lo) != len(hi):
            raise ConfigError("window bounds have different dimensions")
        if len(lo) < 2:
            raise ConfigError(f"dimension must be >= 2, got {len(lo)}")
        for a, b in zip(lo, hi):
            if not a <= 0 <= b:
                raise ConfigError(f"window {lo}..{hi} does not contain the origin")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def sides(cls, *sides: int) -> "Window":
        """``L1 x L2 x ...`` window anchored at the origin: ``[0, L_i - 1]``."""
        if any(s < 1 for s in sides):
            raise ConfigError("window sides must be >= 1")
        return cls((0,) * len(sides), tuple(s - 1 for s in sides))

    @classmethod
    def centered(cls, *half: int) -> "Window":
        return cls(tuple(-h for h in half), tuple(half))

    @classmethod
    def around(cls, *points: Sequence[int], pad: int | Sequence[int] = 0) -> "Window":
        """Smallest window holding the origin and ``points``, padded per axis."""
        d = len(points[0])
        pads = [pad] * d if isinstance(pad, int) else list(pad)
        lo = [min(0, *(p[i] for p in points)) - pads[i] for i in range(d)]
        hi = [max(0, *(p[i] for p in points)) + pads[i] for i in range(d)]
        return cls(tuple(lo), tuple(hi))

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple:
        return tuple(b - a + 1 for a, b in zip(self.lo, self.hi))

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @property
    def strides(self) -> tuple:
        shape = self.shape
        st = [1] * self.d
        for i in range(self.d - 2, -1, -1):
            st[i] = st[i + 1] * shape[i + 1]
        return tuple(st)

    def contains(self, x: Sequence[int]) -> bool:
        return len(x) == self.d and all(a <= c <= b for a, c, b in zip(self.lo, x, self.hi))

    def index(self, x: Sequence[int]) -> int:
        if not self.contains(x):
            raise PreconditionError(f"point {tuple(x)} outside window {self.lo}..{self.hi}")
        return sum((int(c) - a) * s for c, a, s in zip(x, self.lo, self.strides))

    def point(self, idx: int) -> Point:
        out = []
        for a, s in zip(self.lo, self.strides):
            q, idx = divmod(idx, s)
            out.append(a + q)
        return tuple(out)

    def coords(self) -> np.ndarray:
        """(size, d) array of the lattice coordinates of every vertex."""
        grids = np.meshgrid(*(np.arange(a, b + 1) for a, b in zip(self.lo, self.hi)), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def edge_slot(self, u: Sequence[int], v: Sequence[int]) -> int:
        """Position of edge {u, v} in the flattened (d * size) weight array."""
        a, b = canonical_edge(u, v)
        if not (self.contains(a) and self.contains(b)):
            raise PreconditionError(f"edge {a}-{b} leaves the window")
        axis = next(i for i in range(self.d) if a[i] != b[i])
        return axis * self.size + self.index(a)

    def edge_mask(self) -> np.ndarray:
        """(d, size) boolean mask of the slots holding a real in-window edge."""
        coords = self.coords()
        return np.stack([coords[:, i] < self.hi[i] for i in range(self.d)])

    def edges(self) -> Iterator[tuple[Point, Point]]:
        for i in range(self.d):
            for idx in range(self.size):
                u = self.point(idx)
                if u[i] < self.hi[i]:
                    v = list(u)
                    v[i] += 1
                    yield u, tuple(v)

    def spec(self) -> str:
        if all(a == 0 for a in self.lo):
            return "x".join(str(s) for s in self.shape)
        return "x".join(f"{a}..{b}" for a, b in zip(self.lo, self.hi))


def parse_window(text: str) -> Window:
    """``LxL[xL...]`` (sides, origin at the low corner) or ``a..bxc..d`` (bounds)."""
    parts = text.strip().lower().split("x")
    if any(".." in p for p in parts):
        lo, hi = [], []
        for p in parts:
            a, sep, b = p.partition("..")
            try:
                lo.append(int(a))
                hi.append(int(b))
            except ValueError:
                raise ConfigError(f"window {text!r}: bad axis bounds {p!r}") from None
        return Window(tuple(lo), tuple(hi))
    try:
        sides = [int(p) for p in parts]
    except ValueError:
        raise ConfigError(f"window {text!r}: expected LxL...") from None
    return Window.sides(*sides)


@dataclass(frozen=True, eq=False)
class Environment:
    """Immutable weights on every edge of a window, possibly shifted by ``shift``."""

    window: Window
    weights: np.ndarray
    dist: WeightDistribution
    seed: int
    replica_id: int
    exact: bool
    denom: int = 1
    shift: object = 0
    base_weights: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.weights.setflags(write=False)
        if self.base_weights is None:
            object.__setattr__(self, "base_weights", self.weights)

    @property
    def d(self) -> int:
        return self.window.d

    @property
    def flat(self) -> np.ndarray:
        return self.weights.reshape(-1)

    @property
    def min_weight(self):
        w = self.weights[self.window.edge_mask()]
        return self.to_value(w.min()) if w.size else 0

    @property
    def negative(self) -> bool:
        """Flag: some in-window weight is below zero."""
        w = self.weights[self.window.edge_mask()]
        return bool(w.size and w.min() < 0)

    def to_value(self, raw):
        """Convert a raw kernel quantity (numerator or float) to a weight value."""
        if self.exact:
            return Fraction(int(raw), self.denom)
        return float(raw)

    def to_raw(self, value):
        """Inverse of :meth:`to_value`; exact values must be multiples of 1/denom."""
        if self.exact:
            q = to_fraction(value) * self.denom
            if q.denominator != 1:
                raise PreconditionError(f"{value} is not representable over denominator {self.denom}")
            return int(q)
        return float(value)

    def weight(self, u, v):
        return self.to_value(self.flat[self.window.edge_slot(u, v)])

    def require_nonnegative(self):
        if self.negative:
            raise NegativeWeightError(
                f"environment has negative weights (min {self.min_weight}); "
                "shortest-path operations need nonnegative weights"
            )

    def same_weights(self, other: "Environment") -> bool:
        return (
            self.window == other.window
            and self.exact == other.exact
            and self.denom == other.denom
            and np.array_equal(self.weights, other.weights)
        )


def _generator(seed: int, replica_id: int, stream: int = 0) -> np.random.Generator:
    if seed < 0 or replica_id < 0 or stream < 0:
        raise ConfigError("seed, replica_id and stream must be nonnegative")
    key = (seed & (2**64 - 1)) | ((replica_id & (2**48 - 1)) << 64) | ((stream & 0xFFFF) << 112)
    return np.random.Generator(np.random.Philox(key=key))


def sample_environment(
    dist: WeightDistribution,
    window: Window,
    seed: int,
    replica_id: int = 0,
    *,
    exact: bool | None = None,
    stream: int = 0,
) -> Environment:
    """Draw i.i.d. weights for every edge of ``window``.

    The draw for flat edge slot ``e`` is the ``e``-th output of a Philox
    counter-based stream keyed by ``(seed, replica_id, stream)``, so the result
    depends only on those keys, the law and the window.
    """
    if window.d < 2:
        raise ConfigError("dimension must be >= 2")
    if exact is None:
        exact = dist.atomic
    if exact and not dist.atomic:
        raise ConfigError(f"{dist.spec()} is continuous; exact mode needs an atomic law")
    n = window.d * window.size
    u = _generator(seed, replica_id, stream).random(n)
    if exact:
        denom = dist.denominator
        w = dist.numerators_from_uniform(u, denom)
    else:
        denom = 1
        w = np.asarray(dist.from_uniform(u), dtype=np.float64)
    w = w.reshape(window.d, window.size)
    w[~window.edge_mask()] = 0
    return Environment(window, w, dist, seed, replica_id, exact, denom, Fraction(0) if exact else 0.0)


def shift_environment(env: Environment, b) -> Environment:
    """Add ``b`` to every in-window edge weight.

    Base weights are kept; shifts compose additively. A result with negative
    weights is returned with ``negative`` set rather than rejected.
    """
    mask = env.window.edge_mask()
    if env.exact:
        b = to_fraction(b)
        shift = env.shift + b
        denom = math.lcm(env.denom, shift.denominator)
        base = env.base_weights * (denom // env.denom)
        w = base + np.int64(int(shift * denom))
        base = base.copy()
    else:
        shift = float(env.shift) + float(b)
        base = env.base_weights
        w = base + shift
        denom = 1
    w = np.where(mask, w, 0).astype(base.dtype)
    base.setflags(write=False)
    return Environment(env.window, w, env.dist, env.seed, env.replica_id, env.exact, denom, shift, base)
