"""Render the two standard panels from a curve bundle.

Left: per-group mean with the min/max band across runs, plus an optional
horizontal benchmark line.  Right: cross-run population variance on a log
axis (linear when every value is zero, e.g. a single run).  Output is
deterministic for identical inputs: SVG ids are salted with a fixed string
and no timestamps are embedded.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "hamsoc-plots"

import matplotlib.pyplot as plt
import numpy as np

from .bundle import CurveBundle, variance_series

__all__ = ["render"]


def render(bundle: CurveBundle, out_path: str) -> None:
    """Write the mean/band and variance panels to `out_path` (.svg or .png)."""
    if not bundle.groups:
        raise ValueError("empty bundle: nothing to render")

    fig, (ax_mean, ax_var) = plt.subplots(1, 2, figsize=(11, 4.2))
    any_positive_var = False
    for label, (it, runs) in bundle.groups.items():
        mean = runs.mean(axis=0)
        (line,) = ax_mean.plot(it, mean, label=label)
        ax_mean.fill_between(it, runs.min(axis=0), runs.max(axis=0),
                             alpha=0.25, color=line.get_color())
        var = variance_series(runs)
        ax_var.plot(it, var, label=label)
        any_positive_var = any_positive_var or bool(np.any(var > 0))
    if bundle.benchmark is not None:
        ax_mean.axhline(bundle.benchmark, color="black", linewidth=1.0,
                        linestyle="--", label="benchmark")
    ax_mean.set_xlabel("iteration")
    ax_mean.set_ylabel("y0 first component")
    ax_mean.set_title("mean and min/max band across runs")
    ax_mean.legend()
    if any_positive_var:
        ax_var.set_yscale("log")
    ax_var.set_xlabel("iteration")
    ax_var.set_ylabel("cross-run variance")
    ax_var.set_title("variance across runs")
    ax_var.legend()
    fig.tight_layout()
    fig.savefig(out_path, metadata=_stable_metadata(out_path))
    plt.close(fig)


def _stable_metadata(out_path: str) -> dict:
    if out_path.endswith(".svg"):
        return {"Date": None}  # drop the timestamp so bytes are reproducible
    if out_path.endswith(".png"):
        return {"Software": "hamsoc-plots"}
    return {}
