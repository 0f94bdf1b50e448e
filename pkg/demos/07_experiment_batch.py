"""A seeded multi-run experiment with aggregated statistics and artifacts.

Same machinery as the CLI (`hamsoc run`); here driven as a library.  The
output directory gains per-run history.csv files, checkpoints, runs.csv and
summary.json, all byte-reproducible for a fixed config in serial mode.
"""

import json
import os
import tempfile

from hamsoc.experiment import ExperimentConfig, run_experiment

out = os.path.join(tempfile.mkdtemp(), "lq_batch")
config = ExperimentConfig(
    problem="example1", n=3, lam=0.0, algorithm="alg1",
    runs=4, base_seed=11, maxstep=150, batch_size=64, n_steps=10,
    eval_batch=1024, jobs=1,
)
agg = run_experiment(config, out)

print(f"mean y0 first component: {agg.mean:+.5f}")
print(f"benchmark:               {agg.benchmark:+.5f}")
print(f"relative error:          {agg.relative_error:.2e}")
print(f"cross-run variance:      {agg.variance:.2e}")
print(f"\nartifacts under {out}:")
for root, _, files in sorted(os.walk(out)):
    for name in sorted(files):
        rel = os.path.relpath(os.path.join(root, name), out)
        print(f"  {rel}")

summary = json.load(open(os.path.join(out, "summary.json")))
print(f"\nconfig hash: {summary['config_hash'][:16]}...")
