"""Result files: CSV tables, a JSON summary and a run manifest written last.

Number format: exact rationals as ``p/q`` (integers without a denominator),
floats as their shortest round-trip ``repr``. Vectors are comma-joined.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .errors import ConfigError, FppError

__all__ = ["format_value", "parse_value", "csv_text", "write_csv", "emit_results", "sha256_file", "read_manifest"]

MANIFEST = "manifest.json"


def format_value(v) -> str:
    """Serialize one CSV cell."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (tuple, list)):
        return ",".join(format_value(x) for x in v)
    return str(v)


def parse_value(text: str):
    """Inverse of :func:`format_value` for scalar numbers: ``p/q`` and integers become Fractions."""
    t = text.strip()
    if t in ("true", "false"):
        return t == "true"
    if any(c in t for c in ".eE") or t in ("inf", "-inf", "nan"):
        return float(t)
    return Fraction(t)


def csv_text(columns: Sequence[str], rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_value(row.get(c)) for c in columns])
    return buf.getvalue()


def write_csv(path, columns: Sequence[str], rows: Iterable[dict]) -> Path:
    path = Path(path)
    try:
        path.write_text(csv_text(columns, rows))
    except OSError as e:
        raise FppError(f"cannot write {path}: {e.strerror}") from e
    return path


def _jsonable(v):
    if isinstance(v, dict):
        return {format_value(k) if not isinstance(k, str) else k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    if v is None or isinstance(v, str):
        return v
    return format_value(v)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def prepare_out_dir(out_dir, force: bool = False) -> Path:
    """Create ``out_dir``; refuse to reuse a non-empty one unless ``force``."""
    out = Path(out_dir)
    if out.exists():
        if not out.is_dir():
            raise ConfigError(f"output path {out} exists and is not a directory")
        if any(out.iterdir()) and not force:
            raise ConfigError(f"output directory {out} is not empty; pass --force to overwrite")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise FppError(f"cannot create {out}: {e.strerror}") from e
    return out


def write_manifest(out: Path, files: Sequence[str], *, command=None, config=None, config_text=None,
                   experiment=None, seed=None, extra=None) -> Path:
    """Write ``manifest.json`` with sha256 digests of ``files`` (relative to ``out``)."""
    man = {
        "command": command,
        "experiment": experiment,
        "seed": seed,
        "version": __version__,
        "config": _jsonable(config) if config is not None else None,
        "config_text": config_text,
        "files": {f: sha256_file(out / f) for f in files},
    }
    if extra:
        man.update(_jsonable(extra))
    path = out / MANIFEST
    try:
        path.write_text(json.dumps(man, indent=2) + "\n")
    except OSError as e:
        raise FppError(f"cannot write {path}: {e.strerror}") from e
    return path


def emit_results(report, out_dir, *, force: bool = False, command=None, config_text=None) -> dict[str, Path]:
    """Write ``report.csv``, ``summary.json`` and finally ``manifest.json``.

    ``report.csv`` has the report's fixed column order, one row per
    per-replica record; ``summary.json`` holds the aggregates. The manifest
    records the digests of both, the resolved config and run metadata.
    """
    out = prepare_out_dir(out_dir, force)
    paths = {"report": write_csv(out / "report.csv", report.columns, report.records)}
    summary = out / "summary.json"
    try:
        summary.write_text(json.dumps(_jsonable(report.aggregates), indent=2) + "\n")
    except OSError as e:
        raise FppError(f"cannot write {summary}: {e.strerror}") from e
    paths["summary"] = summary
    paths["manifest"] = write_manifest(
        out, ["report.csv", "summary.json"], command=command, config=report.config, config_text=config_text,
        experiment=report.name, seed=report.config.get("seed"),
        extra={"run": {k: v for k, v in report.manifest.items() if k != "config"},
               "finished": datetime.now(timezone.utc).isoformat(timespec="seconds")},
    )
    return paths


def read_manifest(path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST
    try:
        return json.loads(path.read_text())
    except OSError as e:
        raise ConfigError(f"cannot read manifest {path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"manifest {path} is not valid JSON", e.lineno, e.colno) from e


def default_threads(cli_value: int | None) -> int:
    """``--threads`` if given, else ``FPPKIT_THREADS``, else 1."""
    if cli_value is not None:
        n = cli_value
    else:
        env = os.environ.get("FPPKIT_THREADS")
        try:
            n = int(env) if env else 1
        except ValueError:
            raise ConfigError(f"FPPKIT_THREADS={env!r} is not an integer") from None
    if n < 1:
        raise ConfigError("thread count must be >= 1")
    return n
