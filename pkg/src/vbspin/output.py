"""Deterministic CSV emission with the resolved config in '#' header lines."""
from __future__ import annotations

import csv
import io
import json
import math
import os

import numpy as np

from . import __version__
from .config import ScenarioConfig
from .scenarios import ScenarioResult, run

TRACE_COLUMNS = ("label", "time_ns", "value")


def fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return f"{v:.9g}"
    if isinstance(v, np.integer):
        return str(int(v))
    if isinstance(v, np.floating):
        return fmt(float(v))
    return str(v)


def header(cfg: ScenarioConfig, table: str) -> list[str]:
    return [
        f"# vbspin {__version__}",
        f"# kind: {cfg.kind}; table: {table}",
        f"# config_hash: {cfg.digest()}",
        "# config: " + json.dumps(cfg.resolved(), sort_keys=True, separators=(",", ":")),
    ]


def table_text(cfg: ScenarioConfig, table: str, columns, rows) -> str:
    buf = io.StringIO()
    for line in header(cfg, table):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        vals = [r.get(c, "") for c in columns] if isinstance(r, dict) else list(r)
        w.writerow([fmt(v) for v in vals])
    return buf.getvalue()


def write_tables(cfg: ScenarioConfig, res: ScenarioResult, out_dir: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    stem = cfg.kind
    paths = []
    if res.traces:
        rows = [(tr.label, t, v) for tr in res.traces for t, v in zip(tr.times.tolist(), tr.values.tolist())]
        paths.append(_write(os.path.join(out_dir, f"{stem}_traces.csv"), table_text(cfg, "traces", TRACE_COLUMNS, rows)))
    if res.rows:
        cols = list(res.rows[0].keys())
        for r in res.rows[1:]:
            cols += [k for k in r if k not in cols]
        table = "sweep" if cfg.kind == "sweep" else "summary"
        paths.append(_write(os.path.join(out_dir, f"{stem}_{table}.csv"), table_text(cfg, table, cols, res.rows)))
    return paths


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def run_scenario(cfg: ScenarioConfig, out_dir: str) -> tuple[ScenarioResult, list[str]]:
    res = run(cfg)
    return res, write_tables(cfg, res, out_dir)


def read_table(path: str) -> tuple[list[str], list[dict]]:
    """Parse a CSV written by :func:`write_tables`; returns (header comments, rows)."""
    comments, body = [], []
    with open(path, newline="") as fh:
        for line in fh:
            (comments if line.startswith("#") else body).append(line)
    rows = list(csv.DictReader(body))
    return comments, rows
