"""Load per-run training histories into aligned curve bundles.

The input contract is the solver's documented artifact layout: a directory
holding ``run_XX/history.csv`` files (or ``history.csv`` directly) with at
least the columns ``iteration`` and ``y0_first``.  All runs of a group must
share one iteration grid; nothing else about the solver is assumed.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from glob import glob

import numpy as np

__all__ = ["CurveBundle", "SchemaError", "load_histories", "variance_series"]

REQUIRED_COLUMNS = ("iteration", "y0_first")


class SchemaError(ValueError):
    """A history file does not match the documented schema."""


@dataclass
class CurveBundle:
    groups: dict                                # label -> (iterations, (runs, K))
    benchmark: "float | None" = None

    def merge(self, other: "CurveBundle") -> "CurveBundle":
        """Overlay another bundle; groups keep their own iteration grids."""
        clash = set(self.groups) & set(other.groups)
        if clash:
            raise SchemaError(f"duplicate curve labels: {sorted(clash)}")
        groups = dict(self.groups)
        groups.update(other.groups)
        benchmark = self.benchmark if self.benchmark is not None else other.benchmark
        return CurveBundle(groups, benchmark)


def _read_history(path: str) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in REQUIRED_COLUMNS:
            if col not in header:
                raise SchemaError(f"{path}: missing column {col!r}")
        iters, values = [], []
        for row in reader:
            if row["y0_first"] == "":
                continue  # iterations without a recorded estimate
            iters.append(int(row["iteration"]))
            values.append(float(row["y0_first"]))
    if not iters:
        raise SchemaError(f"{path}: no usable rows")
    return np.asarray(iters), np.asarray(values)


def load_histories(directory: str, label: "str | None" = None,
                   benchmark: "float | None" = None) -> CurveBundle:
    """Collect every history.csv under `directory` into one labeled group."""
    direct = os.path.join(directory, "history.csv")
    if os.path.exists(direct):
        paths = [direct]
    else:
        paths = sorted(glob(os.path.join(directory, "*", "history.csv")))
    if not paths:
        raise SchemaError(f"{directory}: no history.csv found")
    grids, series = [], []
    for path in paths:
        iters, values = _read_history(path)
        grids.append(iters)
        series.append(values)
    for path, grid in zip(paths[1:], grids[1:]):
        if not np.array_equal(grid, grids[0]):
            raise SchemaError(f"{path}: iteration grid differs from {paths[0]}")
    label = label or os.path.basename(os.path.normpath(directory))
    return CurveBundle({label: (grids[0], np.vstack(series))}, benchmark)


def variance_series(runs: np.ndarray) -> np.ndarray:
    """Population variance across runs at each iteration (what the panel shows)."""
    mean = runs.mean(axis=0)
    return ((runs - mean) ** 2).mean(axis=0)
