"""Experiment runner: aggregation, config handling, artifacts, determinism."""

import csv
import json
import os

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hamsoc import experiment
from hamsoc.experiment import (
    AggregateReport, ConfigError, ExperimentConfig, aggregate, config_hash,
    run_experiment,
)


def tiny_config(**over):
    base = dict(
        problem="example1", n=2, lam=0.0, algorithm="alg1", runs=2,
        base_seed=7, maxstep=3, batch_size=4, n_steps=3, eval_batch=8, jobs=1,
    )
    base.update(over)
    return ExperimentConfig.from_dict(base)


# --------------------------------------------------------------- aggregate

def test_aggregate_constant_values():
    agg = aggregate([-1.0, -1.0, -1.0], benchmark=-1.0)
    assert agg.mean == -1.0
    assert agg.relative_error == 0.0
    assert agg.variance == 0.0


def test_aggregate_hand_values():
    agg = aggregate([1.0, 2.0, 3.0])
    assert agg.mean == pytest.approx(2.0)
    assert agg.variance == pytest.approx(2.0 / 3.0)
    assert agg.benchmark is None and agg.relative_error is None


def test_aggregate_relative_error_scale():
    agg = aggregate([-1.15733], benchmark=-1.1573)
    assert agg.relative_error == pytest.approx(3e-5 / 1.1573, rel=1e-9)


def test_aggregate_empty_rejected():
    with pytest.raises(ValueError):
        aggregate([])


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=20),
        st.randoms(use_true_random=False))
def test_aggregate_permutation_invariant(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    a, b = aggregate(values), aggregate(shuffled)
    assert a.mean == pytest.approx(b.mean, rel=1e-12, abs=1e-12)
    assert a.variance == pytest.approx(b.variance, rel=1e-12, abs=1e-12)


@given(st.lists(st.floats(0.5, 100), min_size=1, max_size=10),
        st.floats(0.5, 10))
def test_aggregate_scaling(values, c):
    base = aggregate(values, benchmark=2.0)
    scaled = aggregate([c * v for v in values], benchmark=2.0 * c)
    assert scaled.mean == pytest.approx(c * base.mean, rel=1e-9)
    assert scaled.variance == pytest.approx(c * c * base.variance, rel=1e-9)
    assert scaled.relative_error == pytest.approx(base.relative_error, rel=1e-9)


# ------------------------------------------------------------------ config

def test_config_rejects_alg1_without_explicit_cost():
    with pytest.raises(ConfigError, match="algorithm"):
        tiny_config(problem="example3", lam=None)


def test_config_requires_lambda_for_example1():
    with pytest.raises(ConfigError, match="lam"):
        ExperimentConfig.from_dict(dict(problem="example1", n=2))


def test_config_rejects_unknown_fields():
    with pytest.raises(ConfigError, match="unknown"):
        ExperimentConfig.from_dict(dict(problem="example2", n=2, bogus=1))


def test_config_lambda_alias():
    cfg = ExperimentConfig.from_dict({"problem": "example1", "n": 3, "lambda": 0.4})
    assert cfg.lam == 0.4


def test_config_hash_ignores_jobs():
    a, b = tiny_config(jobs=1), tiny_config(jobs=4)
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(tiny_config(base_seed=8))


# ------------------------------------------------------------- experiments

def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_experiment_writes_artifacts(tmp_path):
    out = str(tmp_path / "exp")
    agg = run_experiment(tiny_config(), out)
    assert isinstance(agg, AggregateReport)
    rows = read_csv(os.path.join(out, "runs.csv"))
    assert [r["status"] for r in rows] == ["ok", "ok"]
    hist = read_csv(os.path.join(out, "run_00", "history.csv"))
    assert len(hist) == 4  # maxstep training rows plus the evaluation row
    assert hist[-1]["iteration"] == "3"
    summary = json.load(open(os.path.join(out, "summary.json")))
    assert summary["aggregate"]["benchmark"] is not None
    assert summary["config_hash"] == config_hash(tiny_config())
    # final history row equals the run's headline estimate
    assert float(hist[-1]["y0_first"]) == summary["runs"][0]["y0_first"]
    for role in ("u", "v"):
        assert os.path.exists(os.path.join(out, "run_00", f"{role}.npz"))


def test_run_experiment_single_untrained_run(tmp_path):
    out = str(tmp_path / "exp0")
    agg = run_experiment(tiny_config(runs=1, maxstep=0), out)
    assert agg.variance == 0.0
    hist = read_csv(os.path.join(out, "run_00", "history.csv"))
    assert len(hist) == 1
    assert np.isfinite(agg.mean)


def test_run_experiment_deterministic_bytes(tmp_path):
    out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
    run_experiment(tiny_config(), out_a)
    run_experiment(tiny_config(), out_b)
    for rel in ("runs.csv", "summary.json", "run_00/history.csv",
                "run_01/history.csv"):
        with open(os.path.join(out_a, rel), "rb") as fh:
            blob_a = fh.read()
        with open(os.path.join(out_b, rel), "rb") as fh:
            blob_b = fh.read()
        assert blob_a == blob_b, rel


def test_run_experiment_alg2_artifacts(tmp_path):
    out = str(tmp_path / "exp2")
    cfg = tiny_config(algorithm="alg2", kappa=2, runs=1, maxstep=2)
    run_experiment(cfg, out)
    hist = read_csv(os.path.join(out, "run_00", "history.csv"))
    assert "loss2" in hist[0]
    summary = json.load(open(os.path.join(out, "summary.json")))
    assert "final_loss2" in summary["runs"][0]
    assert "y0_readout" in summary["runs"][0]
    for role in ("u", "v", "y", "z"):
        assert os.path.exists(os.path.join(out, "run_00", f"{role}.npz"))


def test_run_experiment_marks_failed_runs(tmp_path, monkeypatch):
    original = experiment.run_single

    def flaky(doc, run_idx, out_dir):
        if run_idx == 1:
            raise RuntimeError("synthetic failure")
        return original(doc, run_idx, out_dir)

    monkeypatch.setattr(experiment, "run_single", flaky)
    out = str(tmp_path / "flaky")
    agg = run_experiment(tiny_config(runs=3), out)
    rows = read_csv(os.path.join(out, "runs.csv"))
    assert [r["status"] for r in rows] == ["ok", "failed", "ok"]
    assert rows[1]["y0_first"] == ""
    assert len(agg.values) == 2
    summary = json.load(open(os.path.join(out, "summary.json")))
    assert "synthetic failure" in summary["runs"][1]["error"]


def test_run_experiment_parallel_matches_serial(tmp_path):
    out_s, out_p = str(tmp_path / "serial"), str(tmp_path / "par")
    agg_s = run_experiment(tiny_config(), out_s)
    agg_p = run_experiment(tiny_config(jobs=2), out_p)
    assert agg_s.values == agg_p.values
    with open(os.path.join(out_s, "summary.json"), "rb") as fh:
        blob_s = fh.read()
    with open(os.path.join(out_p, "summary.json"), "rb") as fh:
        blob_p = fh.read()
    assert blob_s == blob_p
