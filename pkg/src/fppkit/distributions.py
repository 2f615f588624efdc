"""Edge-weight laws and their text grammar.

Grammar (used by the CLI and config files)::

    det:c                 point mass at c
    bern:p:a:b            P{t=a}=p, P{t=b}=1-p
    atoms:v1@p1,v2@p2,..  finite atomic law
    unif:lo:hi            uniform on [lo, hi]
    exp:rate+offset       offset + Exponential(rate)

Atomic laws are held in exact rationals so that passage times can be
compared without floating-point tie ambiguity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import numpy as np

from .errors import ConfigError

__all__ = [
    "WeightDistribution",
    "Deterministic",
    "Bernoulli",
    "FiniteAtoms",
    "UniformContinuous",
    "Exponential",
    "parse_dist",
    "to_fraction",
]


def to_fraction(x) -> Fraction:
    """Exact rational from an int, Fraction, decimal string or float.

    Floats go through their shortest repr, so ``0.3`` becomes ``3/10``.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a weight")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


class WeightDistribution:
    """Base class for i.i.d. edge-weight laws."""

    #: True when every support point is an atom with rational value.
    atomic = False

    @property
    def ess_inf(self):
        raise NotImplementedError

    @property
    def ess_sup(self):
        raise NotImplementedError

    @property
    def mean(self):
        raise NotImplementedError

    def atoms(self) -> list[tuple[Fraction, Fraction]]:
        """(value, probability) pairs with positive mass, sorted by value."""
        return []

    def sf(self, s: float) -> float:
        """P{t >= s}."""
        raise NotImplementedError

    def from_uniform(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms on [0,1) to float64 weights by inverse CDF."""
        raise NotImplementedError

    def spec(self) -> str:
        raise NotImplementedError

    def __str__(self):
        return self.spec()

    # exact-mode helpers, atomic laws only
    @property
    def denominator(self) -> int:
        """Common denominator of all atom values."""
        if not self.atomic:
            raise ConfigError(f"{self.spec()} has no exact representation")
        return reduce(math.lcm, (v.denominator for v, _ in self.atoms()), 1)

    def numerators_from_uniform(self, u: np.ndarray, denom: int) -> np.ndarray:
        """Inverse CDF returning integer numerators over ``denom``."""
        atoms = self.atoms()
        values = np.array([int(v * denom) for v, _ in atoms], dtype=np.int64)
        cum = np.cumsum([float(p) for _, p in atoms])
        idx = np.searchsorted(cum, u, side="right")
        np.minimum(idx, len(atoms) - 1, out=idx)
        return values[idx]


class _AtomicMixin:
    atomic = True

    @property
    def ess_inf(self):
        return self.atoms()[0][0]

    @property
    def ess_sup(self):
        return self.atoms()[-1][0]

    @property
    def mean(self):
        return sum((v * p for v, p in self.atoms()), Fraction(0))

    def sf(self, s):
        s = to_fraction(s)
        return float(sum((p for v, p in self.atoms() if v >= s), Fraction(0)))

    def from_uniform(self, u):
        atoms = self.atoms()
        values = np.array([float(v) for v, _ in atoms])
        cum = np.cumsum([float(p) for _, p in atoms])
        idx = np.searchsorted(cum, u, side="right")
        np.minimum(idx, len(atoms) - 1, out=idx)
        return values[idx]


def _check_value(v: Fraction, what="value"):
    if v < 0:
        raise ConfigError(f"negative {what} {v} not allowed (weights must be >= 0)")


def _check_prob(p: Fraction):
    if not 0 <= p <= 1:
        raise ConfigError(f"probability {p} outside [0, 1]")


@dataclass(frozen=True)
class Deterministic(_AtomicMixin, WeightDistribution):
    c: Fraction

    def __post_init__(self):
        object.__setattr__(self, "c", to_fraction(self.c))
        _check_value(self.c)

    def atoms(self):
        return [(self.c, Fraction(1))]

    def spec(self):
        return f"det:{_fmt(self.c)}"


@dataclass(frozen=True)
class Bernoulli(_AtomicMixin, WeightDistribution):
    """Two-point law: mass ``p0`` at ``a``, the rest at ``b``."""

    p0: Fraction
    a: Fraction = Fraction(0)
    b: Fraction = Fraction(1)

    def __post_init__(self):
        for name in ("p0", "a", "b"):
            object.__setattr__(self, name, to_fraction(getattr(self, name)))
        _check_prob(self.p0)
        _check_value(self.a)
        _check_value(self.b)

    def atoms(self):
        mass: dict[Fraction, Fraction] = {}
        mass[self.a] = mass.get(self.a, Fraction(0)) + self.p0
        mass[self.b] = mass.get(self.b, Fraction(0)) + 1 - self.p0
        return sorted((v, p) for v, p in mass.items() if p > 0)

    def spec(self):
        return f"bern:{_fmt(self.p0)}:{_fmt(self.a)}:{_fmt(self.b)}"


@dataclass(frozen=True)
class FiniteAtoms(_AtomicMixin, WeightDistribution):
    pairs: tuple

    def __post_init__(self):
        pairs = tuple((to_fraction(v), to_fraction(p)) for v, p in self.pairs)
        if not pairs:
            raise ConfigError("atoms: empty atom list")
        for v, p in pairs:
            _check_value(v)
            _check_prob(p)
        total = sum((p for _, p in pairs), Fraction(0))
        if total != 1:
            raise ConfigError(f"atoms: probabilities sum to {_fmt(total)} ({float(total):g}), not 1")
        object.__setattr__(self, "pairs", pairs)

    def atoms(self):
        mass: dict[Fraction, Fraction] = {}
        for v, p in self.pairs:
            mass[v] = mass.get(v, Fraction(0)) + p
        return sorted((v, p) for v, p in mass.items() if p > 0)

    def spec(self):
        return "atoms:" + ",".join(f"{_fmt(v)}@{_fmt(p)}" for v, p in self.pairs)


@dataclass(frozen=True)
class UniformContinuous(WeightDistribution):
    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if self.lo < 0:
            raise ConfigError("unif: lower end must be >= 0")
        if not self.hi > self.lo:
            raise ConfigError("unif: need lo < hi")

    ess_inf = property(lambda self: self.lo)
    ess_sup = property(lambda self: self.hi)
    mean = property(lambda self: 0.5 * (self.lo + self.hi))

    def sf(self, s):
        return float(min(1.0, max(0.0, (self.hi - s) / (self.hi - self.lo))))

    def from_uniform(self, u):
        return self.lo + (self.hi - self.lo) * u

    def spec(self):
        return f"unif:{self.lo!r}:{self.hi!r}"


@dataclass(frozen=True)
class Exponential(WeightDistribution):
    rate: float
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "rate", float(self.rate))
        object.__setattr__(self, "offset", float(self.offset))
        if not self.rate > 0:
            raise ConfigError("exp: rate must be > 0")
        if self.offset < 0:
            raise ConfigError("exp: offset must be >= 0")

    ess_inf = property(lambda self: self.offset)
    ess_sup = property(lambda self: math.inf)
    mean = property(lambda self: self.offset + 1.0 / self.rate)

    def sf(self, s):
        if s <= self.offset:
            return 1.0
        return math.exp(-self.rate * (s - self.offset))

    def from_uniform(self, u):
        return self.offset - np.log1p(-u) / self.rate

    def spec(self):
        return f"exp:{self.rate!r}+{self.offset!r}"


def _fmt(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    # prefer a terminating decimal when there is one
    d = q.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    if d == 1:
        s = f"{float(q)!r}"
        if Fraction(s) == q:
            return s
    return f"{q.numerator}/{q.denominator}"


def _num(text: str, what: str) -> Fraction:
    try:
        return to_fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"cannot parse {what} {text!r} as a number") from None


def parse_dist(text: str) -> WeightDistribution:
    """Parse a distribution spec such as ``bern:0.3:0:1``."""
    text = text.strip()
    kind, sep, rest = text.partition(":")
    if not sep:
        raise ConfigError(f"distribution {text!r}: expected '<kind>:<params>'")
    kind = kind.lower()
    if kind == "det":
        return Deterministic(_num(rest, "det value"))
    if kind == "bern":
        parts = rest.split(":")
        if len(parts) != 3:
            raise ConfigError(f"bern expects bern:p:a:b, got {text!r}")
        p, a, b = (_num(x, "bern parameter") for x in parts)
        return Bernoulli(p, a, b)
    if kind == "atoms":
        pairs = []
        for item in rest.split(","):
            v, at, p = item.partition("@")
            if not at:
                raise ConfigError(f"atoms entry {item!r}: expected value@prob")
            pairs.append((_num(v, "atom value"), _num(p, "atom probability")))
        return FiniteAtoms(tuple(pairs))
    if kind == "unif":
        parts = rest.split(":")
        if len(parts) != 2:
            raise ConfigError(f"unif expects unif:lo:hi, got {text!r}")
        return UniformContinuous(float(_num(parts[0], "unif lo")), float(_num(parts[1], "unif hi")))
    if kind == "exp":
        rate, plus, off = rest.partition("+")
        return Exponential(float(_num(rate, "exp rate")), float(_num(off, "exp offset")) if plus else 0.0)
    raise ConfigError(f"unknown distribution kind {kind!r}")
