"""SVG line plots and heatmaps from the CSV tables."""
from __future__ import annotations

import os

from .output import TRACE_COLUMNS, read_table

KINDS = ("lines", "heatmap")
HEATMAP_COLUMNS = ("N", "p", "max_value")


class RenderError(ValueError):
    pass


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "vbspin"
    return plt


def render(paths, kind: str, out_dir: str | None = None) -> list[str]:
    """Render each CSV to ``<name>.svg``; returns the written paths."""
    if kind not in KINDS:
        raise RenderError(f"kind must be one of {KINDS}")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    written = []
    for path in paths:
        _, rows = read_table(path)
        target = os.path.join(out_dir or os.path.dirname(path) or ".", os.path.splitext(os.path.basename(path))[0] + ".svg")
        if kind == "lines":
            _lines(rows, path, target)
        else:
            _heatmap(rows, path, target)
        written.append(target)
    return written


def _check(rows, cols, path):
    if rows and not set(cols) <= set(rows[0]):
        raise RenderError(f"{path}: expected columns {cols}, found {tuple(rows[0])}")


def _lines(rows, path, target):
    _check(rows, TRACE_COLUMNS, path)
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    series = {}
    for r in rows:
        t, v = series.setdefault(r["label"], ([], []))
        t.append(float(r["time_ns"]))
        v.append(float(r["value"]))
    for label, (t, v) in series.items():
        ax.plot(t, v, label=label)
    ax.set_xlabel("time (ns)")
    ax.set_ylabel("fidelity")
    if series:
        ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(target, format="svg", metadata={"Date": None})
    plt.close(fig)


def _heatmap(rows, path, target):
    import numpy as np

    _check(rows, HEATMAP_COLUMNS, path)
    plt = _pyplot()
    ns = sorted({int(r["N"]) for r in rows})
    ps = sorted({int(r["p"]) for r in rows})
    grid = np.full((len(ps), len(ns)), np.nan)
    for r in rows:
        grid[ps.index(int(r["p"])), ns.index(int(r["N"]))] = float(r["max_value"])
    fig, ax = plt.subplots(figsize=(6, 4))
    im = ax.imshow(grid, origin="lower", aspect="auto", vmin=0.0, vmax=1.0, cmap="viridis")
    ax.set_xticks(range(len(ns)), [str(n) for n in ns])
    ax.set_yticks(range(len(ps)), [str(p) for p in ps])
    ax.set_xlabel("N")
    ax.set_ylabel("p")
    fig.colorbar(im, ax=ax, label="max relative fidelity")
    fig.tight_layout()
    fig.savefig(target, format="svg", metadata={"Date": None})
    plt.close(fig)
