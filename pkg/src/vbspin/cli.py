"""Command line entry point."""
from __future__ import annotations

import argparse
import sys

from .config import VERB_TO_KIND, ConfigError, load_config
from .output import run_scenario
from .render import KINDS as RENDER_KINDS, RenderError, render

VERBS = tuple(VERB_TO_KIND) + ("render",)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vbspin", description="Synchronous nuclear-spin gate simulations.")
    sub = ap.add_subparsers(dest="verb", required=True)
    for verb in VERB_TO_KIND:
        sp = sub.add_parser(verb)
        sp.add_argument("--config", help="JSON scenario file")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--jobs", type=int)
        sp.add_argument("--step", type=float, help="integrator step in ns")
        sp.add_argument("--svg", action="store_true", help="also render the CSVs")
    rp = sub.add_parser("render")
    rp.add_argument("csv", nargs="+")
    rp.add_argument("--kind", choices=RENDER_KINDS, default="lines")
    rp.add_argument("--out", help="output directory (default: next to each CSV)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verb == "render":
        try:
            for p in render(args.csv, args.kind, args.out):
                print(p)
        except (RenderError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        return 0
    try:
        cfg = load_config(args.config, VERB_TO_KIND[args.verb], seed=args.seed, jobs=args.jobs, step=args.step)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    res, paths = run_scenario(cfg, args.out)
    if args.svg:
        svgs = []
        for p in paths:
            if p.endswith("_sweep.csv"):
                svgs += render([p], "heatmap")
            elif p.endswith("_traces.csv"):
                svgs += render([p], "lines")
        paths += svgs
    for p in paths:
        print(p)
    if not res.converged:
        print("warning: convergence check failed; outputs kept", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
