"""Command line front end: `hamsoc run` and `hamsoc benchmark`.

`run` executes a config-driven experiment (JSON file, flags override file
values) and writes per-run and aggregate artifacts.  `benchmark` prints the
Riccati reference values as CSV.  On failure a machine-readable JSON error
is written to stderr and the exit code is nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys

from .experiment import ExperimentConfig, run_experiment
from .riccati import benchmark_y0

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hamsoc")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a multi-seed training experiment")
    run.add_argument("--config", help="JSON config file")
    run.add_argument("--problem", choices=["example1", "example2", "example3"])
    run.add_argument("--algorithm", choices=["alg1", "alg2"])
    run.add_argument("--n", type=int)
    run.add_argument("--lambda", dest="lam", type=float,
                     help="coupling of the LQ terminal matrix (example1)")
    run.add_argument("--runs", type=int)
    run.add_argument("--seed", dest="base_seed", type=int)
    run.add_argument("--maxstep", type=int)
    run.add_argument("--batch-size", dest="batch_size", type=int)
    run.add_argument("--eval-batch", dest="eval_batch", type=int)
    run.add_argument("--kappa", type=int)
    run.add_argument("--jobs", type=int)
    run.add_argument("--out", required=True, help="output directory")

    bench = sub.add_parser("benchmark", help="print Riccati reference values as CSV")
    bench.add_argument("--n", type=int, default=100)
    bench.add_argument("--lambdas", default="0.0,0.2,0.4,0.6,0.8,1.0",
                       help="comma-separated coupling values")
    bench.add_argument("--horizon", type=float, default=0.1)
    return parser


_RUN_OVERRIDES = [
    "problem", "algorithm", "n", "lam", "runs", "base_seed", "maxstep",
    "batch_size", "eval_batch", "kappa", "jobs",
]


def _run_command(args) -> int:
    doc = {}
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
    for field in _RUN_OVERRIDES:
        value = getattr(args, field)
        if value is not None:
            doc[field] = value
    config = ExperimentConfig.from_dict(doc)
    agg = run_experiment(config, args.out)
    line = f"mean={agg.mean!r} variance={agg.variance!r}"
    if agg.relative_error is not None:
        line += f" benchmark={agg.benchmark!r} relative_error={agg.relative_error!r}"
    print(line)
    return 0


def _benchmark_command(args) -> int:
    print("lambda,y0_first")
    for token in args.lambdas.split(","):
        lam = float(token)
        y0 = benchmark_y0(args.n, lam, horizon=args.horizon)
        print(f"{lam},{float(y0[0])!r}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run_command(args)
        return _benchmark_command(args)
    except Exception as exc:
        json.dump(
            {"error": {"type": type(exc).__name__, "message": str(exc)}},
            sys.stderr,
        )
        sys.stderr.write("\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
