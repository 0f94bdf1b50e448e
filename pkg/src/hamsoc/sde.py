"""Time grid, seeded Brownian increments, Euler-Maruyama rollout.

A rollout advances the controlled state

    x_{i+1} = x_i + b(t_i, x_i, u_i) dt_i + sigma(t_i, x_i, v_i) . dB_i

with the controls (and optionally the backward heads y, z) read from
feedforward networks at (t_i, x_i).  When the network parameters are tape
variables the whole rollout is differentiable end to end; with plain arrays
it is a cheap forward simulation.  Noise application follows the problem's
declared structure: scalar noise (d = 1) scales the sigma vector by one
increment per sample, diagonal noise (d = n) multiplies componentwise, so
no dense n x n matrices are ever materialized.
"""

from __future__ import annotations

import csv
import gzip
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import autodiff as ad
from .nets import MlpParams, mlp_apply
from .problems import ProblemSpec

__all__ = [
    "TimeGrid", "BrownianBatch", "TrajectoryBatch", "GraphRollout",
    "NonFiniteStateError", "rng_for", "sample_increments", "rollout_graph",
    "simulate", "dump_trajectories",
]


class NonFiniteStateError(RuntimeError):
    """The simulated state left the finite range; message carries the step."""


def rng_for(seed: int, *key: int) -> np.random.Generator:
    """Independent deterministic stream for (seed, key...)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))


@dataclass(frozen=True)
class TimeGrid:
    times: np.ndarray  # (N+1,), t_0 = 0 up to t_N = T

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        object.__setattr__(self, "times", t)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("grid needs at least two time points")
        if t[0] != 0.0:
            raise ValueError("grid must start at t = 0")
        if np.any(np.diff(t) < 0.0):
            raise ValueError("grid times must be non-decreasing")

    @staticmethod
    def uniform(horizon: float, n_steps: int = 25) -> "TimeGrid":
        if n_steps < 1:
            raise ValueError("need n_steps >= 1")
        return TimeGrid(np.linspace(0.0, horizon, n_steps + 1))

    @property
    def n_steps(self) -> int:
        return self.times.size - 1

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])


@dataclass(frozen=True)
class BrownianBatch:
    increments: np.ndarray  # (M, N, d), entries ~ N(0, dt_i)
    seed: object


def sample_increments(grid: TimeGrid, m_samples: int, d: int, seed) -> BrownianBatch:
    """i.i.d. N(0, dt_i) increments, deterministic per seed.

    `seed` may be an int or a sequence of ints (a derived stream key).
    """
    if m_samples < 1 or d < 1:
        raise ValueError("need m_samples >= 1 and d >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    z = rng.standard_normal((m_samples, grid.n_steps, d))
    return BrownianBatch(z * np.sqrt(grid.dt)[None, :, None], seed)


@dataclass
class TrajectoryBatch:
    """Stacked simulated paths; y/z present only for four-network rollouts."""

    x: np.ndarray              # (M, N+1, n)
    u: np.ndarray              # (M, N, n)
    v: np.ndarray              # (M, N, n)
    y: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None


@dataclass
class GraphRollout:
    """Per-step tensors of one rollout; the training losses consume these."""

    xs: list      # N+1 tensors (M, n)
    us: list      # N tensors (M, n)
    vs: list
    ys: Optional[list] = None
    zs: Optional[list] = None

    def stacked(self) -> TrajectoryBatch:
        def pile(ts):
            return np.stack([t.value for t in ts], axis=1)

        return TrajectoryBatch(
            x=pile(self.xs),
            u=pile(self.us),
            v=pile(self.vs),
            y=pile(self.ys) if self.ys is not None else None,
            z=pile(self.zs) if self.zs is not None else None,
        )


def rollout_graph(
    problem: ProblemSpec,
    nets: dict,
    grid: TimeGrid,
    batch: BrownianBatch,
) -> GraphRollout:
    """Euler-Maruyama rollout with controls from `nets`.

    `nets` maps role -> (weights, biases); roles "u" and "v" are required,
    "y" and "z" optional.  Entries may be tape variables or plain arrays;
    any tape rides along through the ops.
    """
    m_samples = batch.increments.shape[0]
    if batch.increments.shape[1] != grid.n_steps:
        raise ValueError("Brownian batch does not match the grid")
    want_d = problem.n if problem.diagonal_noise else problem.d
    if batch.increments.shape[2] != want_d:
        raise ValueError(
            f"Brownian batch has d={batch.increments.shape[2]}, problem needs {want_d}"
        )
    with_heads = "y" in nets and "z" in nets

    x = ad.tensor(np.tile(problem.x0, (m_samples, 1)))
    xs, us, vs = [x], [], []
    ys, zs = ([], []) if with_heads else (None, None)
    dts = grid.dt
    for i in range(grid.n_steps):
        t_i = float(grid.times[i])
        inp = ad.concat_cols(ad.tensor(np.full((m_samples, 1), t_i)), x)
        u = mlp_apply(*nets["u"], inp)
        v = mlp_apply(*nets["v"], inp)
        us.append(u)
        vs.append(v)
        if with_heads:
            ys.append(mlp_apply(*nets["y"], inp))
            zs.append(mlp_apply(*nets["z"], inp))
        drift = problem.drift(t_i, x, u)
        sigma = problem.diffusion(t_i, x, v)
        db = ad.tensor(batch.increments[:, i, :])
        if problem.diagonal_noise:
            noise = ad.mul(sigma, db)
        else:
            noise = ad.scale_rows(sigma, db)
        x = ad.add(x, ad.add(ad.smul(drift, float(dts[i])), noise))
        if not np.all(np.isfinite(x.value)):
            raise NonFiniteStateError(f"state became non-finite at step {i + 1}")
        xs.append(x)
    return GraphRollout(xs, us, vs, ys, zs)


def simulate(
    problem: ProblemSpec,
    params: dict,
    grid: TimeGrid,
    batch: BrownianBatch,
) -> TrajectoryBatch:
    """Gradient-free rollout; `params` maps role -> MlpParams."""
    nets = {
        role: (p.weights, p.biases)
        for role, p in params.items()
        if isinstance(p, MlpParams)
    }
    return rollout_graph(problem, nets, grid, batch).stacked()


def dump_trajectories(
    traj: TrajectoryBatch, grid: TimeGrid, path: str, run: int = 0
) -> None:
    """Write paths as gz-compressed CSV, one row per (sample, step).

    Controls (and heads) are empty on the terminal row, which carries only
    the final state.
    """
    m, n_plus, n = traj.x.shape
    cols = ["run", "sample", "step", "t"]
    cols += [f"x_{j + 1}" for j in range(n)]
    cols += [f"u_{j + 1}" for j in range(n)]
    cols += [f"v_{j + 1}" for j in range(n)]
    with_heads = traj.y is not None and traj.z is not None
    if with_heads:
        cols += [f"y_{j + 1}" for j in range(n)]
        cols += [f"z_{j + 1}" for j in range(n)]
    with gzip.open(path, "wt", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for s in range(m):
            for i in range(n_plus):
                row = [run, s, i, repr(float(grid.times[i]))]
                row += [repr(float(val)) for val in traj.x[s, i]]
                if i < n_plus - 1:
                    row += [repr(float(val)) for val in traj.u[s, i]]
                    row += [repr(float(val)) for val in traj.v[s, i]]
                    if with_heads:
                        row += [repr(float(val)) for val in traj.y[s, i]]
                        row += [repr(float(val)) for val in traj.z[s, i]]
                else:
                    row += [""] * (n * (4 if with_heads else 2))
                writer.writerow(row)
