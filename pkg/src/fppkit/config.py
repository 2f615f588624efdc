"""Key-value run configuration for the ``experiment`` subcommand.

Grammar: one ``key = value`` per line; blank lines and text after ``#`` are
ignored. Every key belongs to the schema of the chosen experiment; missing
keys take their defaults and ``auto`` selects a computed default. Values:

* distributions ``bern:0.3:0:1``, windows ``64x64`` or ``-8..20x-8..20``;
* vectors ``60,60``; target lists ``60,60; 40,40``;
* grids ``0, 0.5, 1`` or ``a0:a1:steps`` (``steps`` equal increments);
* rationals ``1/2`` or decimals, read exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable

from .blackbox import BlackBoxParams
from .distributions import parse_dist, to_fraction
from .errors import ConfigError
from .lattice import parse_window

__all__ = ["SCHEMAS", "parse_config", "serialize_config", "run_experiment", "parse_grid", "parse_vec", "parse_targets"]


def _fmt_q(q: Fraction) -> str:
    return str(q)


def parse_rational(text: str) -> Fraction:
    try:
        return to_fraction(text.strip())
    except (ValueError, ZeroDivisionError, TypeError):
        raise ConfigError(f"not a number: {text.strip()!r}") from None


def parse_int(text: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ConfigError(f"not an integer: {text.strip()!r}") from None


def parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise ConfigError(f"not a boolean: {text.strip()!r}")


def parse_vec(text: str, kind=int) -> tuple:
    parts = [p for p in text.replace(" ", "").split(",")]
    if not parts or any(p == "" for p in parts):
        raise ConfigError(f"bad vector {text.strip()!r}")
    return tuple(parse_int(p) if kind is int else parse_rational(p) for p in parts)


def parse_targets(text: str) -> list[tuple]:
    out = [parse_vec(t) for t in text.split(";") if t.strip()]
    if not out:
        raise ConfigError(f"no targets in {text!r}")
    return out


def parse_grid(text: str) -> list[Fraction]:
    """``a, b, c`` or ``a0:a1:steps`` (``steps + 1`` equally spaced points)."""
    t = text.strip()
    if ":" in t:
        parts = t.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid {t!r}: expected a0:a1:steps")
        a0, a1, steps = parse_rational(parts[0]), parse_rational(parts[1]), parse_int(parts[2])
        if steps < 1 or a1 < a0:
            raise ConfigError(f"grid {t!r}: need steps >= 1 and a0 <= a1")
        return [a0 + (a1 - a0) * i / steps for i in range(steps + 1)]
    vals = [parse_rational(p) for p in t.split(",") if p.strip()]
    if not vals:
        raise ConfigError("empty grid")
    return vals


def parse_int_grid(text: str) -> list[int]:
    vals = [parse_int(p) for p in text.split(",") if p.strip()]
    if not vals:
        raise ConfigError("empty grid")
    return vals


def parse_mode(text: str) -> bool | None:
    t = text.strip().lower()
    if t not in ("exact", "float"):
        raise ConfigError(f"mode must be exact or float, got {t!r}")
    return t == "exact"


@dataclass(frozen=True)
class Field:
    parse: Callable[[str], Any]
    fmt: Callable[[Any], str]
    default: Any = None
    required: bool = False
    auto: bool = False  # None means "auto"


_DIST = Field(parse_dist, lambda v: v.spec(), required=True)
_TARGETS = Field(parse_targets, lambda v: "; ".join(",".join(map(str, t)) for t in v), required=True)
_QGRID = lambda default: Field(parse_grid, lambda v: ", ".join(map(_fmt_q, v)), default)  # noqa: E731
_INT = lambda default: Field(parse_int, str, default)  # noqa: E731
_Q = lambda default: Field(parse_rational, _fmt_q, default)  # noqa: E731
_AUTO_INT = Field(parse_int, str, None, auto=True)
_AUTO_Q = Field(parse_rational, _fmt_q, None, auto=True)
_MODE = Field(parse_mode, lambda v: "exact" if v else "float", None, auto=True)
_BUDGET = _INT(10**6)

SCHEMAS: dict[str, dict[str, Field]] = {
    "ratio": {
        "dist": _DIST,
        "targets": _TARGETS,
        "reps": _INT(200),
        "seed": _INT(0),
        "deltas": _QGRID([Fraction(1, 200), Fraction(1, 100), Fraction(1, 50), Fraction(1, 20)]),
        "pad": _AUTO_INT,
        "mode": _MODE,
    },
    "gap": {
        "dist": _DIST,
        "b": _Q(Fraction(0)),
        "targets": _TARGETS,
        "reps": _INT(200),
        "seed": _INT(0),
        "D_grid": _QGRID([Fraction(1, 200), Fraction(1, 100), Fraction(1, 50), Fraction(1, 20)]),
        "pad": _AUTO_INT,
        "node_budget": _BUDGET,
    },
    "singularities": {
        "r": Field(parse_rational, _fmt_q, required=True),
        "s": Field(parse_rational, _fmt_q, required=True),
        "r0": Field(parse_rational, _fmt_q, required=True),
        "ell_max": _INT(20),
        "m_max": _INT(50),
        "lo": _AUTO_Q,
        "hi": _AUTO_Q,
    },
    "blackbox": {
        "dist": _DIST,
        "N": _INT(2),
        "s0": Field(parse_rational, _fmt_q, required=True),
        "delta0": Field(parse_rational, _fmt_q, required=True),
        "bounded": Field(parse_bool, lambda v: "true" if v else "false", None, auto=True),
        "s0_grid": Field(parse_grid, lambda v: ", ".join(map(_fmt_q, v)), None, auto=True),
        "delta0_grid": Field(parse_grid, lambda v: ", ".join(map(_fmt_q, v)), None, auto=True),
        "window": Field(parse_window, lambda v: v.spec(), required=True),
        "targets": _TARGETS,
        "reps": _INT(20),
        "seed": _INT(0),
        "spacing": _INT(4),
        "mode": _MODE,
    },
    "sandwich": {
        "dist": _DIST,
        "xi": Field(lambda t: parse_vec(t, Fraction), lambda v: ",".join(map(_fmt_q, v)), required=True),
        "b_grid": _QGRID([Fraction(0)]),
        "n_grid": Field(parse_int_grid, lambda v: ", ".join(map(str, v)), [50, 100, 150]),
        "reps": _INT(50),
        "seed": _INT(0),
        "curve_n": _AUTO_INT,
        "curve_reps": _AUTO_INT,
        "alpha_max": _Q(Fraction(8)),
        "alpha_steps": _INT(32),
        "pad": _AUTO_INT,
        "node_budget": _BUDGET,
    },
}


def parse_config(text: str, experiment: str) -> dict:
    """Resolve a config document against the schema of ``experiment``.

    Returns every schema key, in schema order; ``auto`` values are ``None``.
    Errors carry the line and column of the offending text.
    """
    if experiment not in SCHEMAS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(SCHEMAS)}")
    schema = SCHEMAS[experiment]
    given: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        key, eq, value = line.partition("=")
        kcol = len(key) - len(key.lstrip()) + 1
        if not eq:
            raise ConfigError("expected 'key = value'", lineno, kcol)
        key = key.strip()
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} for experiment {experiment}", lineno, kcol)
        if key in given:
            raise ConfigError(f"duplicate key {key!r}", lineno, kcol)
        vcol = len(line) - len(value) + (len(value) - len(value.lstrip())) + 1
        f = schema[key]
        if f.auto and value.strip().lower() == "auto":
            given[key] = None
            continue
        try:
            given[key] = f.parse(value.strip())
        except ConfigError as e:
            raise ConfigError(str(e), lineno, vcol) from None
        except (ValueError, TypeError, ZeroDivisionError) as e:
            raise ConfigError(f"{key}: {e}", lineno, vcol) from None
    out = {}
    for key, f in schema.items():
        if key in given:
            out[key] = given[key]
        elif f.required:
            raise ConfigError(f"missing required key {key!r}")
        else:
            out[key] = f.default
    return out


def serialize_config(cfg: dict, experiment: str) -> str:
    """Inverse of :func:`parse_config`: one ``key = value`` line per schema key."""
    schema = SCHEMAS[experiment]
    lines = []
    for key, f in schema.items():
        v = cfg[key]
        lines.append(f"{key} = {'auto' if v is None else f.fmt(v)}")
    return "\n".join(lines) + "\n"


def run_experiment(experiment: str, cfg: dict, threads: int = 1):
    """Run ``experiment`` with a resolved config; returns its ExperimentReport."""
    from . import experiments as ex

    c = dict(cfg)
    if experiment == "ratio":
        return ex.geodesic_ratio_experiment(c["dist"], c["targets"], c["reps"], c["seed"], deltas=c["deltas"],
                                            pad=c["pad"], exact=c["mode"], threads=threads)
    if experiment == "gap":
        return ex.length_gap_experiment(c["dist"], c["b"], c["targets"], c["reps"], c["seed"], D_grid=c["D_grid"],
                                        pad=c["pad"], node_budget=c["node_budget"], threads=threads)
    if experiment == "singularities":
        return ex.singularity_experiment(c["r"], c["s"], c["r0"], c["ell_max"], c["m_max"], c["lo"], c["hi"])
    if experiment == "blackbox":
        params = BlackBoxParams(c["N"], c["s0"], c["delta0"], c["bounded"])
        return ex.black_box_experiment(c["dist"], params, c["window"], c["targets"], c["reps"], c["seed"],
                                       s0_grid=c["s0_grid"], delta0_grid=c["delta0_grid"], spacing=c["spacing"],
                                       exact=c["mode"], threads=threads)
    if experiment == "sandwich":
        return ex.hw_sandwich_experiment(c["dist"], c["xi"], c["b_grid"], c["n_grid"], c["reps"], c["seed"],
                                         curve_n=c["curve_n"], curve_reps=c["curve_reps"], alpha_max=c["alpha_max"],
                                         alpha_steps=c["alpha_steps"], pad=c["pad"], node_budget=c["node_budget"],
                                         threads=threads)
    raise ConfigError(f"unknown experiment {experiment!r}")
