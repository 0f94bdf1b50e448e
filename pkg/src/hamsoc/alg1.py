"""Explicit-cost solver: two control networks trained on the discrete cost.

Applies when the Legendre-Fenchel running cost has a closed form.  Each
iteration draws a fresh Brownian batch, rolls the state forward with the
current networks, and takes one joint Adam step on

    loss = mean_m [ sum_i f(t_i, x_i, u_i, v_i) dt_i + Phi(x_N) ].

After training, y is recovered by Monte-Carlo integration of the adjoint
drift along a large evaluation batch.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import autodiff as ad
from .estimate import adjoint_y_path, eval_control_cost
from .nets import (
    LrSchedule, MlpParams, adam_step, control_spec, default_schedule,
    init_adam, init_mlp, lr_at,
)
from .problems import ProblemSpec
from .report import RunReport
from .sde import GraphRollout, TimeGrid, rng_for, rollout_graph, sample_increments, simulate

__all__ = [
    "TrainConfig", "MissingRunningCostError", "NonFiniteLossError",
    "control_cost", "train", "estimate_y",
]


class MissingRunningCostError(ValueError):
    """The problem has no closed-form running cost; use the constrained solver."""


class NonFiniteLossError(RuntimeError):
    """Training loss became NaN/Inf; message carries the iteration index."""


@dataclass(frozen=True)
class TrainConfig:
    maxstep: int = 3000
    batch_size: int = 256
    n_steps: int = 25
    schedule: Optional[LrSchedule] = None
    seed: int = 0
    eval_batch: int = 10_000

    def __post_init__(self):
        if self.maxstep < 0 or min(self.batch_size, self.n_steps, self.eval_batch) < 1:
            raise ValueError(f"invalid training configuration: {self}")

    def resolved_schedule(self) -> LrSchedule:
        return self.schedule or default_schedule(self.maxstep)


def noise_dim(problem: ProblemSpec) -> int:
    return problem.n if problem.diagonal_noise else problem.d


def control_cost(problem: ProblemSpec, roll: GraphRollout, grid: TimeGrid):
    """Discrete control cost (the training loss); scalar tensor."""
    if problem.running_cost is None:
        raise MissingRunningCostError(
            f"{problem.name} has no explicit running cost"
        )
    total = None
    for i in range(grid.n_steps):
        f_i = problem.running_cost(
            float(grid.times[i]), roll.xs[i], roll.us[i], roll.vs[i]
        )
        term = ad.smul(f_i, float(grid.dt[i]))
        total = term if total is None else ad.add(total, term)
    total = ad.add(total, problem.terminal(roll.xs[-1]))
    return ad.mean(total)


def estimate_y(
    problem: ProblemSpec,
    params: dict,
    grid: TimeGrid,
    eval_batch: int,
    seed,
) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo y recovery from trained controls: (y0, full path table)."""
    batch = sample_increments(grid, eval_batch, noise_dim(problem), seed)
    traj = simulate(problem, params, grid, batch)
    path = adjoint_y_path(problem, traj, grid, kind="explicit")
    return path[0], path


def train(problem: ProblemSpec, config: TrainConfig) -> RunReport:
    """Run the full training loop; deterministic given (problem, config)."""
    if problem.running_cost is None or problem.adjoint_drift_explicit is None:
        raise MissingRunningCostError(
            f"{problem.name} has no explicit running cost; "
            "this solver needs one (see the constrained solver instead)"
        )
    t_start = time.perf_counter()
    spec = control_spec(problem.n)
    params_u = init_mlp(spec, rng_for(config.seed, 0))
    params_v = init_mlp(spec, rng_for(config.seed, 1))
    flat = params_u.flat() + params_v.flat()
    n_u = len(params_u.flat())
    opt = init_adam(flat)
    schedule = config.resolved_schedule()
    grid = TimeGrid.uniform(problem.horizon, config.n_steps)
    d = noise_dim(problem)

    losses = np.empty(config.maxstep)
    lrs = np.empty(config.maxstep)
    y0_curve = np.empty(config.maxstep)
    for step in range(config.maxstep):
        batch = sample_increments(
            grid, config.batch_size, d, [config.seed, 2, step]
        )
        tape = ad.Tape()
        variables = [tape.variable(p) for p in flat]
        nets = {
            "u": (variables[0:n_u:2], variables[1:n_u:2]),
            "v": (variables[n_u::2], variables[n_u + 1::2]),
        }
        roll = rollout_graph(problem, nets, grid, batch)
        loss = control_cost(problem, roll, grid)
        if not np.isfinite(loss.value):
            raise NonFiniteLossError(f"loss became non-finite at iteration {step}")
        grads = tape.gradient(loss, variables)
        lr = lr_at(schedule, step)
        flat, opt = adam_step(flat, grads, opt, lr)
        losses[step] = float(loss.value)
        lrs[step] = lr
        y0_curve[step] = adjoint_y_path(
            problem, roll.stacked(), grid, kind="explicit"
        )[0, 0]

    final = {
        "u": MlpParams.from_flat(flat[:n_u]),
        "v": MlpParams.from_flat(flat[n_u:]),
    }
    eval_batch = sample_increments(
        grid, config.eval_batch, d, [config.seed, 3]
    )
    traj = simulate(problem, final, grid, eval_batch)
    path = adjoint_y_path(problem, traj, grid, kind="explicit")
    return RunReport(
        seed=config.seed,
        losses=losses,
        lrs=lrs,
        y0_curve=y0_curve,
        y0=path[0],
        y0_path=path,
        eval_loss=eval_control_cost(problem, traj, grid),
        wall_clock_s=time.perf_counter() - t_start,
        params=final,
    )
