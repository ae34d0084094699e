"""Command-line entry point.

Subcommands: ``sweep``, ``compare``, ``extra-edges``, ``plot``. Each
experiment reads an INI config (see configs/ for shipped examples);
flags override file values.
"""

from __future__ import annotations

import argparse
import sys

from . import config as cfgmod
from . import plots, runner
from .errors import RpfgcnError


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config file")
    p.add_argument("--out", help="output directory (overrides [run] out)")
    p.add_argument("--seed", type=int, help="first run seed (overrides [run] seed0)")
    p.add_argument("--seeds", type=int, help="number of run seeds (overrides [run] seeds)")
    p.add_argument("--k", type=int, help="neighbor count for knn builders")
    p.add_argument("--trees", type=int, help="tree count for rpforest builders")
    p.add_argument("--max-leaf-size", type=int, dest="max_leaf_size")
    p.add_argument(
        "--split-rule",
        choices=["quantile", "range", "median"],
        dest="split_rule",
        help="threshold placement rule for tree splits",
    )
    p.add_argument("--label-col", dest="label_col", help="label column for CSV datasets")
    p.add_argument("--standardize", action="store_true", help="z-score features")
    p.add_argument(
        "--extra-edge-weight",
        type=float,
        dest="extra_edge_weight",
        help="weight for sampled complement edges (default: 1/trees)",
    )
    p.add_argument("--workers", type=int, help="worker threads for independent cells")
    p.add_argument(
        "--live-timings",
        action="store_true",
        dest="live_timings",
        help="write measured wall times into results.csv (breaks byte reproducibility)",
    )
    p.add_argument("--force", action="store_true", help="reuse an output directory even if its config differs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rpfgcn",
        description="Graph construction by random projection forests, spectral "
        "forest-size tuning, and GCN comparison experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("sweep", "connectivity probe across forest sizes, with elbow detection"),
        ("compare", "train the GCN on each configured graph builder"),
        ("extra-edges", "rpforest graphs padded with sampled missing edges"),
        ("plot", "render SVG charts from a result directory"),
    ):
        p = sub.add_parser(name, help=text)
        if name == "plot":
            p.add_argument("--out", required=True, help="result directory to read")
        else:
            _add_common_flags(p)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "plot":
            for path in plots.emit_plots(args.out):
                print(path)
            return 0
        cfg = cfgmod.apply_overrides(cfgmod.load_config(args.config), args)
        run = {
            "sweep": runner.run_sweep,
            "compare": runner.run_compare,
            "extra-edges": runner.run_extra_edges,
        }[args.command]
        out_dir = run(cfg, force=args.force)
        print(f"wrote {out_dir}")
        return 0
    except RpfgcnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
