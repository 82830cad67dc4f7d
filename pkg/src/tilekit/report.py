"""Figures from a benchmark summary: one plot per metric, rendered to files.

The summary CSV is the single source; nothing here recomputes metrics.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

METRICS = ("hamming", "classification_error", "relative_cost")


def load_summary(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: empty summary")
    return rows


def _series(rows, x_key, metric):
    """method -> sorted (x, mean metric) pairs, averaging duplicates."""
    acc: dict[str, dict[float, list[float]]] = {}
    for row in rows:
        x = float(row[x_key])
        val = float(row[f"mean_{metric}"])
        acc.setdefault(row["method"], {}).setdefault(x, []).append(val)
    out = {}
    for method, buckets in sorted(acc.items()):
        xs = sorted(buckets)
        out[method] = (xs, [sum(buckets[x]) / len(buckets[x]) for x in xs])
    return out


def render_figures(rows: list[dict], out_dir) -> list[Path]:
    """Write one PNG per metric and varying grid axis; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    axes = [
        ("tiles", "tile count"),
        ("size", "matrix size"),
        ("log_var", "log10 noise variance"),
    ]
    written = []
    for x_key, x_label in axes:
        if len({row[x_key] for row in rows}) < 2:
            continue
        for metric in METRICS:
            fig, ax = plt.subplots(figsize=(5.0, 3.6))
            series = _series(rows, x_key, metric)
            positive = True
            for method, (xs, ys) in series.items():
                ax.plot(xs, ys, marker="o", label=method)
                positive &= all(y > 0 for y in ys)
            if positive:
                ax.set_yscale("log")
            ax.set_xlabel(x_label)
            ax.set_ylabel(f"mean {metric.replace('_', ' ')}")
            ax.legend()
            fig.tight_layout()
            path = out_dir / f"{metric}_vs_{x_key}.png"
            fig.savefig(path, dpi=150)
            plt.close(fig)
            written.append(path)
    if not written:
        # Single-point grid: fall back to a bar chart per metric.
        for metric in METRICS:
            fig, ax = plt.subplots(figsize=(5.0, 3.6))
            methods = [row["method"] for row in rows]
            values = [float(row[f"mean_{metric}"]) for row in rows]
            ax.bar(methods, values)
            ax.set_ylabel(f"mean {metric.replace('_', ' ')}")
            fig.tight_layout()
            path = out_dir / f"{metric}_by_method.png"
            fig.savefig(path, dpi=150)
            plt.close(fig)
            written.append(path)
    return written
