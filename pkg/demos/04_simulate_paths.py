"""Euler-Maruyama rollouts under fixed controls, plus the trajectory dump.

Shows the two noise structures: scalar noise for the LQ problem and
componentwise (diagonal) noise for the trigonometric one.
"""

import os
import tempfile

import numpy as np

from hamsoc.nets import MlpParams
from hamsoc.problems import example1, example2
from hamsoc.sde import TimeGrid, dump_trajectories, sample_increments, simulate


def constant_net(n, value):
    return MlpParams([np.zeros((n, n + 1))], [np.asarray(value, dtype=float)])


p = example1(4, 0.0)
grid = TimeGrid.uniform(p.horizon, 25)
batch = sample_increments(grid, 500, p.d, seed=7)
nets = {"u": constant_net(4, np.full(4, 0.5)), "v": constant_net(4, np.full(4, 0.3))}
traj = simulate(p, nets, grid, batch)
print(f"LQ paths: x_T mean {traj.x[:, -1].mean():.4f}, std {traj.x[:, -1].std():.4f}")

p2 = example2(4)
batch2 = sample_increments(grid, 500, p2.n, seed=8)
traj2 = simulate(p2, nets, grid, batch2)
print(f"trig paths: x_T mean {traj2.x[:, -1].mean():.4f}, std {traj2.x[:, -1].std():.4f}")

out = os.path.join(tempfile.mkdtemp(), "paths.csv.gz")
dump_trajectories(traj, grid, out)
print(f"wrote compressed trajectory table: {out} ({os.path.getsize(out)} bytes)")
