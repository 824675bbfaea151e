"""CSV traces and JSON summaries."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


def _fmt(v) -> str:
    if v is None:
        return ""
    v = float(v)
    return repr(v)


def trace_header(d: int) -> list:
    return ["n"] + [f"x_{i}" for i in range(d)] + ["dist_sq", "grad_norm_sq", "cumulative_evals"]


def write_trace(record, path, d: int = None) -> Path:
    """One row per outer iteration; floats in shortest round-trip form."""
    path = Path(path)
    d = record.x.shape[1] if record is not None else d
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(trace_header(d))
            if record is None:
                return path
            for i in range(len(record)):
                w.writerow(
                    [str(int(record.n[i]))]
                    + [_fmt(v) for v in record.x[i]]
                    + [
                        _fmt(None if record.dist_sq is None else record.dist_sq[i]),
                        _fmt(None if record.grad_norm_sq is None else record.grad_norm_sq[i]),
                        str(int(record.cumulative_evals[i])),
                    ]
                )
    except OSError as exc:
        raise OSError(f"cannot write trace {path}: {exc}") from exc
    return path


def read_trace(path) -> dict:
    """Parse a trace CSV back into arrays; empty optional columns come back as None."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    d = len(header) - 4
    out = {
        "n": np.array([int(r[0]) for r in body], dtype=int),
        "x": np.array([[float(v) for v in r[1 : 1 + d]] for r in body], dtype=float).reshape(len(body), d),
        "cumulative_evals": np.array([int(r[-1]) for r in body], dtype=np.int64),
    }
    for name, col in (("dist_sq", -3), ("grad_norm_sq", -2)):
        vals = [r[col] for r in body]
        out[name] = None if (not vals or any(v == "" for v in vals)) else np.array([float(v) for v in vals])
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def emit(records, tables: dict, out_dir, config: dict = None, d: int = None) -> dict:
    """Write run_XXX.csv per record plus summary.json; returns the written paths."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
    paths = {"traces": []}
    records = list(records)
    if not records:
        paths["traces"].append(str(write_trace(None, out_dir / "run_000.csv", d=d or 0)))
    for i, rec in enumerate(records):
        paths["traces"].append(str(write_trace(rec, out_dir / f"run_{i:03d}.csv")))
    summary = {
        "config": config,
        "seeds": [rec.meta.get("seed") for rec in records],
        "failures": {str(rec.meta.get("seed")): rec.failure for rec in records if rec.failure},
        "statistics": tables,
    }
    spath = out_dir / "summary.json"
    try:
        with open(spath, "w") as fh:
            json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write summary {spath}: {exc}") from exc
    paths["summary"] = str(spath)
    return paths
