"""Configuration-driven multi-run experiments with aggregated statistics.

One experiment trains `runs` independent seeded instances of a solver on one
problem, then reports the mean, the cross-run population variance, and (for
the linear-quadratic example) the relative error against the Riccati
benchmark.  Per-run artifacts land in ``out_dir/run_XX``:

    history.csv   iteration, loss[, loss2], lr, y0_first
                  (rows 0..maxstep-1 are training iterations estimated on the
                  training batch; the final row at iteration == maxstep holds
                  the post-training evaluation-batch estimates)
    u.npz, ...    final network checkpoints per role
    timing.json   wall-clock seconds (kept out of the deterministic files)

and the batch writes ``runs.csv``, ``summary.json``, ``timing.json``.  All
deterministic artifacts are byte-identical across repeated serial runs of
the same configuration.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import alg1, alg2
from .nets import LrSchedule, save_params
from .problems import ProblemSpec, example1, example2, example3
from .report import RunReport
from .riccati import benchmark_y0

__all__ = [
    "ExperimentConfig", "AggregateReport", "ConfigError",
    "aggregate", "config_hash", "run_experiment", "run_single",
]

_PROBLEMS = {"example1", "example2", "example3"}
_ALGORITHMS = {"alg1", "alg2"}


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the offending field."""


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    n: int
    algorithm: str = "alg1"
    lam: Optional[float] = None          # example1 coupling
    horizon: Optional[float] = None      # problem default when None
    x0_value: Optional[float] = None     # constant fill, problem default when None
    runs: int = 10
    base_seed: int = 0
    maxstep: int = 3000
    batch_size: int = 256
    n_steps: int = 25
    eval_batch: int = 10_000
    kappa: int = 5
    dt_weighted_penalty: bool = False
    lr_boundaries: Optional[tuple[int, ...]] = None
    lr_values: Optional[tuple[float, ...]] = None
    jobs: int = 1

    def __post_init__(self):
        if self.problem not in _PROBLEMS:
            raise ConfigError(f"problem: unknown name {self.problem!r}")
        if self.algorithm not in _ALGORITHMS:
            raise ConfigError(f"algorithm: unknown name {self.algorithm!r}")
        if self.problem == "example1":
            if self.lam is None or not 0.0 <= self.lam <= 1.0:
                raise ConfigError("lam: example1 needs a coupling in [0, 1]")
        if self.n < 1:
            raise ConfigError("n: must be >= 1")
        if self.runs < 1:
            raise ConfigError("runs: must be >= 1")
        if self.maxstep < 0:
            raise ConfigError("maxstep: must be >= 0")
        if min(self.batch_size, self.n_steps, self.eval_batch, self.kappa) < 1:
            raise ConfigError("batch_size/n_steps/eval_batch/kappa: must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs: must be >= 1")
        if (self.lr_boundaries is None) != (self.lr_values is None):
            raise ConfigError("lr_boundaries/lr_values: give both or neither")
        if self.algorithm == "alg1" and self.problem == "example3":
            raise ConfigError(
                "algorithm: example3 has no explicit running cost; use alg2"
            )

    @staticmethod
    def from_dict(doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        if "lambda" in doc:  # config files use the spelled-out name
            doc["lam"] = doc.pop("lambda")
        for key in ("lr_boundaries", "lr_values"):
            if doc.get(key) is not None:
                doc[key] = tuple(doc[key])
        known = set(ExperimentConfig.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return ExperimentConfig(**doc)

    def canonical(self) -> dict:
        doc = asdict(self)
        doc["lambda"] = doc.pop("lam")
        doc.pop("jobs")  # parallelism does not change the experiment
        for key in ("lr_boundaries", "lr_values"):
            if doc[key] is not None:
                doc[key] = list(doc[key])
        return {k: doc[k] for k in sorted(doc)}


def config_hash(config: ExperimentConfig) -> str:
    blob = json.dumps(config.canonical(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def build_problem(config: ExperimentConfig) -> ProblemSpec:
    kwargs = {}
    if config.horizon is not None:
        kwargs["horizon"] = config.horizon
    if config.x0_value is not None:
        kwargs["x0"] = np.full(config.n, config.x0_value)
    if config.problem == "example1":
        return example1(config.n, config.lam, **kwargs)
    if config.problem == "example2":
        return example2(config.n, **kwargs)
    return example3(config.n, **kwargs)


def _schedule(config: ExperimentConfig) -> Optional[LrSchedule]:
    if config.lr_boundaries is None:
        return None
    return LrSchedule(tuple(config.lr_boundaries), tuple(config.lr_values))


def _train_config(config: ExperimentConfig, seed: int):
    common = dict(
        maxstep=config.maxstep,
        batch_size=config.batch_size,
        n_steps=config.n_steps,
        schedule=_schedule(config),
        seed=seed,
        eval_batch=config.eval_batch,
    )
    if config.algorithm == "alg1":
        return alg1.TrainConfig(**common)
    return alg2.AltTrainConfig(
        kappa=config.kappa, dt_weighted_penalty=config.dt_weighted_penalty, **common
    )


@dataclass(frozen=True)
class AggregateReport:
    mean: float
    variance: float                 # population variance across runs
    values: tuple[float, ...]
    benchmark: Optional[float] = None
    relative_error: Optional[float] = None


def aggregate(values, benchmark: Optional[float] = None) -> AggregateReport:
    """Mean, population variance, and relative error vs an optional benchmark."""
    values = [float(v) for v in values]
    if not values:
        raise ValueError("aggregate needs at least one value")
    arr = np.asarray(values)
    mean = float(arr.mean())
    variance = float(((arr - mean) ** 2).mean())
    rel = None
    if benchmark is not None:
        rel = abs(mean - benchmark) / abs(benchmark)
    return AggregateReport(mean, variance, tuple(values), benchmark, rel)


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_history(path: str, config: ExperimentConfig, report: RunReport) -> None:
    is_alg2 = config.algorithm == "alg2"
    header = ["iteration", "loss"] + (["loss2"] if is_alg2 else []) + ["lr", "y0_first"]
    last_lr = report.lrs[-1] if report.lrs.size else _train_config(
        config, report.seed).resolved_schedule().values[0]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(report.losses.size):
            row = [i, _fmt(report.losses[i])]
            if is_alg2:
                row.append(_fmt(report.losses2[i]))
            row += [_fmt(report.lrs[i]), _fmt(report.y0_curve[i])]
            writer.writerow(row)
        # final row: evaluation-batch numbers at the trained parameters
        row = [report.losses.size, _fmt(report.eval_loss)]
        if is_alg2:
            row.append(_fmt(report.eval_loss2))
        row += [_fmt(last_lr), _fmt(report.y0_first)]
        writer.writerow(row)


def run_single(config_doc: dict, run_idx: int, out_dir: str) -> dict:
    """Train one seeded run and write its artifacts; picklable worker."""
    config = ExperimentConfig.from_dict(config_doc)
    problem = build_problem(config)
    seed = config.base_seed + run_idx
    run_dir = os.path.join(out_dir, f"run_{run_idx:02d}")
    os.makedirs(run_dir, exist_ok=True)
    train = alg1.train if config.algorithm == "alg1" else alg2.train
    report = train(problem, _train_config(config, seed))

    _write_history(os.path.join(run_dir, "history.csv"), config, report)
    for role, params in report.params.items():
        save_params(params, os.path.join(run_dir, f"{role}.npz"))
    with open(os.path.join(run_dir, "timing.json"), "w") as fh:
        json.dump({"wall_clock_s": report.wall_clock_s}, fh)

    row = {
        "run": run_idx,
        "seed": seed,
        "status": "ok",
        "y0_first": report.y0_first,
        "y0": [float(v) for v in report.y0],
        "final_loss": float(report.eval_loss),
    }
    if config.algorithm == "alg2":
        row["final_loss2"] = float(report.eval_loss2)
        row["y0_readout"] = [float(v) for v in report.y0_readout]
    return row


def run_experiment(config: ExperimentConfig, out_dir: str) -> AggregateReport:
    """Run all seeded trainings, write runs.csv / summary.json, aggregate."""
    os.makedirs(out_dir, exist_ok=True)
    doc = config.canonical()
    doc["lam"] = doc.pop("lambda")
    rows = []
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futures = {
                pool.submit(run_single, doc, r, out_dir): r
                for r in range(config.runs)
            }
            results = {}
            for fut, r in futures.items():
                try:
                    results[r] = fut.result()
                except Exception as exc:  # mark the run, keep the batch alive
                    results[r] = _failure_row(config, r, exc)
            rows = [results[r] for r in range(config.runs)]
    else:
        for r in range(config.runs):
            try:
                rows.append(run_single(doc, r, out_dir))
            except Exception as exc:
                rows.append(_failure_row(config, r, exc))

    ok = [row for row in rows if row["status"] == "ok"]
    if not ok:
        raise RuntimeError("every run failed; see summary.json for details")
    benchmark = None
    if config.problem == "example1":
        problem = build_problem(config)
        benchmark = float(
            benchmark_y0(config.n, config.lam, a=problem.x0, horizon=problem.horizon)[0]
        )
    agg = aggregate([row["y0_first"] for row in ok], benchmark)

    _write_runs_csv(os.path.join(out_dir, "runs.csv"), config, rows)
    summary = {
        "problem": {
            "name": config.problem,
            "n": config.n,
            "lambda": config.lam,
            "horizon": build_problem(config).horizon,
        },
        "algorithm": config.algorithm,
        "config": config.canonical(),
        "config_hash": config_hash(config),
        "variance_definition": "population variance of the y0 first component across runs",
        "runs": rows,
        "aggregate": {
            "mean": agg.mean,
            "variance": agg.variance,
            "benchmark": agg.benchmark,
            "relative_error": agg.relative_error,
        },
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return agg


def _failure_row(config: ExperimentConfig, run_idx: int, exc: Exception) -> dict:
    return {
        "run": run_idx,
        "seed": config.base_seed + run_idx,
        "status": "failed",
        "error": f"{type(exc).__name__}: {exc}",
        "traceback": traceback.format_exc(),
    }


def _write_runs_csv(path: str, config: ExperimentConfig, rows: list[dict]) -> None:
    is_alg2 = config.algorithm == "alg2"
    header = ["run", "seed", "y0_first", "final_loss"]
    if is_alg2:
        header.append("final_loss2")
    header.append("status")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            ok = row["status"] == "ok"
            out = [row["run"], row["seed"]]
            out.append(_fmt(row["y0_first"]) if ok else "")
            out.append(_fmt(row["final_loss"]) if ok else "")
            if is_alg2:
                out.append(_fmt(row["final_loss2"]) if ok else "")
            out.append(row["status"])
            writer.writerow(out)
