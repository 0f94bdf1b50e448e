"""Train the explicit-cost solver on a small LQ instance (about a minute).

Watch the cost decrease and the y(0) estimate approach the Riccati value;
at the optimum the diffusion control should be near zero.
"""

import numpy as np

from hamsoc import alg1, sde
from hamsoc.problems import example1
from hamsoc.riccati import benchmark_y0

n = 4
p = example1(n, 0.0)
cfg = alg1.TrainConfig(maxstep=600, batch_size=128, n_steps=25, eval_batch=4096, seed=0)
report = alg1.train(p, cfg)

bench = benchmark_y0(n, 0.0)[0]
print(f"loss:    {report.losses[0]:.4f} -> {report.losses[-1]:.4f}")
print(f"y0 estimate: {report.y0_first:+.5f}   (Riccati: {bench:+.5f})")
print(f"relative error: {abs(report.y0_first - bench) / abs(bench):.2e}")

grid = sde.TimeGrid.uniform(p.horizon, 25)
batch = sde.sample_increments(grid, 1000, p.d, [42])
traj = sde.simulate(p, report.params, grid, batch)
print(f"mean |v| along paths: {np.abs(traj.v).mean():.4f}  (optimum: 0)")
print(f"y0 trace (every 100 iters): {np.round(report.y0_curve[::100], 4)}")
