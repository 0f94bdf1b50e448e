"""Command line interface: subcommands, overrides, error reporting."""

import json
import os

from hamsoc.cli import main
from hamsoc.riccati import benchmark_y0


def test_benchmark_subcommand_csv(capsys):
    code = main(["benchmark", "--n", "100", "--lambdas", "0.0,0.2", "--horizon", "0.1"])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "lambda,y0_first"
    lam, y0 = lines[1].split(",")
    assert float(lam) == 0.0
    assert float(y0) == benchmark_y0(100, 0.0)[0]
    assert len(lines) == 3


def test_run_subcommand_with_config_and_overrides(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "problem": "example1", "n": 2, "lambda": 0.0, "runs": 2,
        "maxstep": 2, "batch_size": 4, "n_steps": 3, "eval_batch": 8,
    }))
    out = str(tmp_path / "out")
    code = main(["run", "--config", str(cfg_path), "--runs", "1", "--out", out])
    assert code == 0
    assert "mean=" in capsys.readouterr().out
    summary = json.load(open(os.path.join(out, "summary.json")))
    assert summary["config"]["runs"] == 1  # flag overrode the file value


def test_run_invalid_config_json_error(tmp_path, capsys):
    code = main(["run", "--problem", "example3", "--algorithm", "alg1",
                 "--n", "2", "--out", str(tmp_path / "x")])
    assert code != 0
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "ConfigError"
