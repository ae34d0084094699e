"""Standalone SVG charts for experiment outputs.

Readers are deliberately strict: a missing or empty CSV is an error, not
a silently blank figure.
"""

from __future__ import annotations

import csv
import os
import re

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .errors import ConfigError


def _read_csv(path) -> list[dict[str, str]]:
    path = os.fspath(path)
    if not os.path.exists(path):
        raise ConfigError(f"CSV not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    return rows


def _builder_sort_key(name: str):
    # Put percent-suffixed ablation builders in numeric order.
    m = re.search(r"_extra([0-9.]+)$", name)
    return (0, float(m.group(1)), name) if m else (1, 0.0, name)


def plot_sweep(sweep_csvs, out_svg) -> str:
    """One log-scale line per sweep CSV: probe value against tree count."""
    if not sweep_csvs:
        raise ConfigError("no sweep CSVs given")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for path in sweep_csvs:
        rows = _read_csv(path)
        ts = [int(r["T"]) for r in rows]
        stds = [max(float(r["std_v0"]), 1e-16) for r in rows]
        label = os.path.splitext(os.path.basename(os.fspath(path)))[0].removeprefix("sweep_")
        ax.plot(ts, stds, marker="o", markersize=3, label=label)
    ax.set_yscale("log")
    ax.set_xlabel("trees in forest")
    ax.set_ylabel("std of smallest Laplacian eigenvector")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_svg, format="svg")
    plt.close(fig)
    return os.fspath(out_svg)


def _grouped_bars(ax, datasets, builders, values, errors, ylabel):
    width = 0.8 / len(builders)
    for bi, builder in enumerate(builders):
        xs = [di + bi * width for di in range(len(datasets))]
        ys = [values[(d, builder)] for d in datasets]
        es = [errors.get((d, builder), 0.0) for d in datasets]
        ax.bar(xs, ys, width=width * 0.95, yerr=es, capsize=2, label=builder)
    ax.set_xticks([di + 0.4 - width / 2 for di in range(len(datasets))])
    ax.set_xticklabels(datasets, rotation=20, ha="right")
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    ax.grid(True, axis="y", alpha=0.3)


def plot_results(results_csv, out_dir) -> list[str]:
    """Grouped bar charts of test accuracy and total edge weight."""
    rows = _read_csv(results_csv)
    required = {"dataset", "builder", "test_accuracy", "total_weight"}
    if not required <= set(rows[0]):
        raise ConfigError(f"{results_csv}: missing columns {sorted(required - set(rows[0]))}")
    datasets = sorted({r["dataset"] for r in rows})
    builders = sorted({r["builder"] for r in rows}, key=_builder_sort_key)
    outputs = []
    for metric, ylabel, fname in (
        ("test_accuracy", "test accuracy", "accuracy.svg"),
        ("total_weight", "total edge weight", "total_weight.svg"),
    ):
        means, sds = {}, {}
        for d in datasets:
            for b in builders:
                vals = [float(r[metric]) for r in rows if r["dataset"] == d and r["builder"] == b]
                if not vals:
                    raise ConfigError(f"{results_csv}: no rows for dataset={d}, builder={b}")
                means[(d, b)] = sum(vals) / len(vals)
                sds[(d, b)] = (
                    (sum((v - means[(d, b)]) ** 2 for v in vals) / (len(vals) - 1)) ** 0.5
                    if len(vals) > 1
                    else 0.0
                )
        fig, ax = plt.subplots(figsize=(7, 4.5))
        _grouped_bars(ax, datasets, builders, means, sds, ylabel)
        fig.tight_layout()
        out = os.path.join(os.fspath(out_dir), fname)
        fig.savefig(out, format="svg")
        plt.close(fig)
        outputs.append(out)
    return outputs


def emit_plots(out_dir) -> list[str]:
    """Render every chart the files in ``out_dir`` support."""
    out_dir = os.fspath(out_dir)
    produced = []
    sweep_csvs = sorted(
        os.path.join(out_dir, f)
        for f in os.listdir(out_dir)
        if f.startswith("sweep_") and f.endswith(".csv")
    )
    if sweep_csvs:
        produced.append(plot_sweep(sweep_csvs, os.path.join(out_dir, "sweep.svg")))
    results_csv = os.path.join(out_dir, "results.csv")
    if os.path.exists(results_csv):
        produced.extend(plot_results(results_csv, out_dir))
    if not produced:
        raise ConfigError(f"{out_dir}: nothing to plot (no sweep_*.csv or results.csv)")
    return produced
