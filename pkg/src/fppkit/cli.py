"""``fppkit`` command line.

Global flags (``--seed --threads --mode --out --force``) may come before or
after the subcommand, except that ``restricted`` uses ``--mode`` for its
step mode, so its arithmetic mode must be given before the subcommand.
Exit codes: 0 success, 2 configuration error, 3 precondition error,
4 inconclusive.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from fractions import Fraction
from pathlib import Path

from . import __version__
from .config import parse_config, parse_grid, parse_targets, parse_vec, run_experiment, serialize_config
from .distributions import parse_dist, to_fraction
from .errors import ConfigError, FppError, InconclusiveError
from .io import csv_text, default_threads, emit_results, prepare_out_dir, read_manifest, write_csv, write_manifest
from .lattice import Window, parse_window, sample_environment, shift_environment

EXPERIMENTS = ("ratio", "gap", "singularities", "blackbox", "sandwich")


def _add_globals(p: argparse.ArgumentParser, sub: bool, with_mode: bool = True) -> None:
    # on subparsers the defaults are suppressed so they do not mask values given before the subcommand
    kw = {"default": argparse.SUPPRESS} if sub else {"default": None}
    p.add_argument("--seed", type=int, help="master seed (default 0)", **kw)
    p.add_argument("--threads", type=int, help="worker threads (default $FPPKIT_THREADS or 1)", **kw)
    if with_mode:
        p.add_argument("--mode", choices=("exact", "float"), help="arithmetic mode (default: exact for atomic laws)", **kw)
    p.add_argument("--out", help="output file or directory", **kw)
    p.add_argument("--force", action="store_true", help="overwrite an existing output directory",
                   **({"default": argparse.SUPPRESS} if sub else {"default": False}))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fppkit", description="First-passage percolation toolkit.")
    ap.add_argument("--version", action="version", version=f"fppkit {__version__}")
    _add_globals(ap, sub=False)
    sp = ap.add_subparsers(dest="command", required=True)

    p = sp.add_parser("sample", help="sample an environment and write its edge weights")
    _add_globals(p, sub=True)
    p.add_argument("--dist", required=True)
    p.add_argument("--window", required=True)
    p.add_argument("--replica", type=int, default=0)

    p = sp.add_parser("geodesic", help="passage time and geodesic lengths to a target")
    _add_globals(p, sub=True)
    p.add_argument("--dist", required=True)
    p.add_argument("--window", required=True)
    p.add_argument("--target", required=True, help="x1,x2[,x3...]")
    p.add_argument("--source", default=None, help="default: the origin")
    p.add_argument("--shift", default="0", help="weight shift b")
    p.add_argument("--sandwich", default=None, metavar="d,h", help="also report the difference quotients at steps d, h")
    p.add_argument("--replica", type=int, default=0)

    p = sp.add_parser("restricted", help="step-restricted passage times")
    _add_globals(p, sub=True, with_mode=False)
    p.add_argument("--dist", required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--mode", dest="steps", choices=("r", "ro", "both"), default="both",
                   help="exactly-k steps (r), with zero steps (ro) or both")
    p.add_argument("--targets", required=True, help="file with one x1,x2 per line, a window grid like -2..2x0..3, or '1,2; 3,4'")
    p.add_argument("--window", default=None, help="default: radius K around the source")
    p.add_argument("--source", default=None)
    p.add_argument("--verify", action="store_true", help="check T = G0 at K against Dijkstra (exit 4 if K is too small)")
    p.add_argument("--replica", type=int, default=0)

    p = sp.add_parser("shape", help="estimate the restricted shape function at one point")
    _add_globals(p, sub=True)
    p.add_argument("--dist", required=True)
    p.add_argument("--xi", required=True)
    p.add_argument("--alpha", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--kind", choices=("r", "ro"), default="r")

    p = sp.add_parser("duality", help="radial curves, shift curves and superdifferential intervals")
    _add_globals(p, sub=True)
    p.add_argument("--dist", required=True)
    p.add_argument("--xi", required=True)
    p.add_argument("--alpha-grid", required=True, help="a0:a1:steps or a comma list")
    p.add_argument("--b-grid", required=True, help="b0:b1:steps or a comma list")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, required=True)

    p = sp.add_parser("experiment", help="run a replicated experiment from a config file or a manifest")
    _add_globals(p, sub=True)
    p.add_argument("name", nargs="?", choices=EXPERIMENTS)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--config", help="key = value config file")
    g.add_argument("--from-manifest", help="manifest.json (or its directory) of an earlier run")
    return ap


# ---------------------------------------------------------------------------


def _exact(args, dist) -> bool | None:
    mode = getattr(args, "mode", None)
    if mode is None:
        return None
    if mode == "exact" and not dist.atomic:
        raise ConfigError(f"exact mode needs an atomic law, got {dist.spec()}")
    return mode == "exact"


def _emit_table(args, columns, rows) -> None:
    if args.out:
        path = Path(args.out)
        if path.exists() and not args.force:
            raise ConfigError(f"{path} exists; pass --force to overwrite")
        write_csv(path, columns, rows)
    else:
        sys.stdout.write(csv_text(columns, rows))


def _seed(args) -> int:
    return 0 if args.seed is None else args.seed


def cmd_sample(args) -> int:
    dist = parse_dist(args.dist)
    win = parse_window(args.window)
    env = sample_environment(dist, win, _seed(args), args.replica, exact=_exact(args, dist))
    rows = []
    for u, v in win.edges():
        axis = next(i for i, (a, b) in enumerate(zip(u, v)) if a != b)
        rows.append({"axis": axis, "x": u, "weight": env.weight(u, v)})
    _emit_table(args, ("axis", "x", "weight"), rows)
    return 0


def cmd_geodesic(args) -> int:
    from .standard import geodesic_stats, shift_sandwich

    dist = parse_dist(args.dist)
    win = parse_window(args.window)
    target = parse_vec(args.target)
    source = parse_vec(args.source) if args.source else (0,) * win.d
    b = to_fraction(args.shift)
    env = sample_environment(dist, win, _seed(args), args.replica, exact=_exact(args, dist))
    row = {"seed": _seed(args), "target": target}
    if args.sandwich:
        dq, hq = parse_vec(args.sandwich, Fraction)
        rec = shift_sandwich(env, target, b, dq, hq, source=source)
        st = geodesic_stats(shift_environment(env, b), source, target)
        row.update(T=st.T, L_min=rec.L_min_b, L_max=rec.L_max_b, exactness=rec.exactness, lhs=rec.lhs, rhs=rec.rhs)
    else:
        st = geodesic_stats(shift_environment(env, b) if b else env, source, target)
        row.update(T=st.T, L_min=st.L_min, L_max=st.L_max, exactness=st.exactness)
    _emit_table(args, ("seed", "target", "T", "L_min", "L_max", "exactness", "lhs", "rhs"), [row])
    return 0


def _read_targets(text: str) -> list[tuple]:
    """A file with one point per line, a window spec (every point of it), or ``x1,x2; y1,y2``."""
    p = Path(text)
    if p.is_file():
        lines = [ln.split("#", 1)[0].strip() for ln in p.read_text().splitlines()]
        return parse_targets("; ".join(ln for ln in lines if ln))
    if "x" in text or ".." in text:
        return [tuple(int(c) for c in pt) for pt in parse_window(text).coords()]
    return parse_targets(text)


def cmd_restricted(args) -> int:
    from .restricted import check_T_from_G, restricted_passage
    from .standard import passage_times

    dist = parse_dist(args.dist)
    targets = _read_targets(args.targets)
    d = len(targets[0])
    source = parse_vec(args.source) if args.source else (0,) * d
    win = parse_window(args.window) if args.window else Window(tuple(c - args.K for c in source), tuple(c + args.K for c in source))
    for x in targets:
        if not win.contains(x):
            raise ConfigError(f"target {x} is outside window {win.spec()}")
    env = sample_environment(dist, win, _seed(args), args.replica, exact=_exact(args, dist))
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        field = restricted_passage(env, source, args.K, args.steps)
    rows = []
    for x in targets:
        for k in range(args.K + 1):
            rows.append({
                "seed": _seed(args), "k": k, "x": x,
                "G": field.value(k, x) if field.G is not None else None,
                "G_zero": field.value(k, x, zero_steps=True) if field.G0 is not None else None,
            })
    _emit_table(args, ("seed", "k", "x", "G", "G_zero"), rows)
    if args.verify:
        if field.G0 is None:
            raise ConfigError("--verify needs --mode ro or both")
        res = check_T_from_G(env, field, passage_times(env, source), targets)
        if res.status == "fail":
            raise FppError(f"T differs from G0 at {list(res.mismatches)}")
        if res.status == "inconclusive":
            raise InconclusiveError(f"K={args.K} is below the longest geodesic length for {list(res.short)}")
    return 0


def cmd_shape(args) -> int:
    from .restricted import estimate_shape

    dist = parse_dist(args.dist)
    xi = parse_vec(args.xi, Fraction)
    est = estimate_shape(dist, xi, to_fraction(args.alpha), args.n, args.reps, _seed(args), args.kind,
                         exact=_exact(args, dist))
    row = {"xi": xi, "alpha": to_fraction(args.alpha), "n": args.n, "reps": args.reps,
           "value_hat": est.value_hat, "stderr": est.stderr}
    _emit_table(args, ("xi", "alpha", "n", "reps", "value_hat", "stderr"), [row])
    return 0


def cmd_duality(args) -> int:
    from .duality import (build_radial_curve, direct_shift_curve, dual_shift_curve, lambda_interval, mu_from_g,
                          trichotomy_report)

    if not args.out:
        raise ConfigError("duality writes a directory; pass --out")
    dist = parse_dist(args.dist)
    exact = _exact(args, dist)
    xi = parse_vec(args.xi, Fraction)
    agrid = parse_grid(args.alpha_grid)
    bgrid = parse_grid(args.b_grid)
    seed = _seed(args)
    g, g0 = build_radial_curve(dist, xi, agrid, args.n, args.reps, seed, exact=exact)
    dual = dual_shift_curve(g, bgrid)
    direct = direct_shift_curve(dist, xi, bgrid, args.n, args.reps, seed, exact=exact)
    out = prepare_out_dir(args.out, args.force)
    files = []

    def table(name, cols, rows):
        write_csv(out / name, cols, rows)
        files.append(name)

    table("radial_curve.csv", ("alpha", "k", "value", "stderr", "value_zero", "stderr_zero"),
          [{"alpha": a, "k": k, "value": v, "stderr": s, "value_zero": v0, "stderr_zero": s0}
           for a, k, v, s, v0, s0 in zip(g.alphas, g.ks, g.values, g.stderrs, g0.values, g0.stderrs)])
    for name, sc in (("shift_curve_dual.csv", dual), ("shift_curve_direct.csv", direct)):
        table(name, ("b", "mu", "stderr"), [{"b": b, "mu": m, "stderr": s}
                                            for b, m, s in zip(sc.b_grid, sc.mu_values, sc.stderrs)])
    table("lambda.csv", ("b", "lo", "hi"), [{"b": iv.b, "lo": iv.lo, "hi": iv.hi}
                                            for iv in (lambda_interval(g, b) for b in bgrid)])
    tri = trichotomy_report(g, g0, mu_from_g(g, 0))
    table("trichotomy.csv", ("alpha", "label"), [{"alpha": a, "label": lab} for a, lab in zip(tri["alphas"], tri["labels"])])
    config = {"dist": dist.spec(), "xi": xi, "alpha_grid": args.alpha_grid, "b_grid": args.b_grid, "n": args.n,
              "reps": args.reps, "seed": seed, "mode": args.mode, "streams": {"radial": 1, "direct": 2}}
    write_manifest(out, files, command=" ".join(["fppkit"] + sys.argv[1:]), config=config, experiment="duality",
                   seed=seed, extra={"pattern_ok": tri["pattern_ok"]})
    return 0


def cmd_experiment(args) -> int:
    threads = default_threads(args.threads)
    if args.from_manifest:
        man = read_manifest(args.from_manifest)
        name, text = man.get("experiment"), man.get("config_text")
        if name not in EXPERIMENTS or not text:
            raise ConfigError(f"{args.from_manifest} is not an experiment manifest")
        if args.name and args.name != name:
            raise ConfigError(f"manifest is for experiment {name!r}, not {args.name!r}")
    else:
        if not args.name:
            raise ConfigError("name the experiment: " + "|".join(EXPERIMENTS))
        name = args.name
        try:
            text = Path(args.config).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read {args.config}: {e.strerror}") from e
    cfg = parse_config(text, name)
    if args.seed is not None and "seed" in cfg:
        cfg["seed"] = args.seed
    if getattr(args, "mode", None) is not None:
        if "mode" in cfg:
            cfg["mode"] = args.mode == "exact"
        elif args.mode == "float" and name in ("gap", "sandwich"):
            raise ConfigError(f"experiment {name} needs exact arithmetic")
    out = args.out or f"fppkit-{name}-seed{cfg.get('seed', 0)}"
    report = run_experiment(name, cfg, threads)
    emit_results(report, out, force=args.force, command=" ".join(["fppkit"] + sys.argv[1:]),
                 config_text=serialize_config(cfg, name))
    print(f"{name}: {len(report.records)} records written to {out}")
    return 0


COMMANDS = {
    "sample": cmd_sample,
    "geodesic": cmd_geodesic,
    "restricted": cmd_restricted,
    "shape": cmd_shape,
    "duality": cmd_duality,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for key, default in (("seed", None), ("threads", None), ("mode", None), ("out", None), ("force", False)):
        if not hasattr(args, key):
            setattr(args, key, default)
    try:
        return COMMANDS[args.command](args)
    except FppError as e:
        print(f"fppkit: error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
