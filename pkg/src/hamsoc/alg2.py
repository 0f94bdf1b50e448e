"""Constrained solver: four networks with alternating minimization.

For problems whose running cost has no closed form, the cost functional is
written with the conjugate objective evaluated at network heads y, z,

    loss1 = mean_m [ sum_i C(t_i, x_i, u_i, v_i, y_i, z_i) dt_i + Phi(x_N) ],

subject to the stationarity of C in (y, z), enforced by minimizing the
squared-residual penalty

    loss2 = mean_m sum_i [ |C_y(t_i, ...)|^2 + |C_z(t_i, ...)|^2 ].

Each outer iteration takes one Adam step on the control parameters against
loss1 (backward heads frozen but still differentiated through their state
input), then kappa Adam steps on the head parameters against loss2 on fresh
rollouts (controls frozen, so the state is simulated gradient-free).  loss2
is unweighted by dt as defined; a dt-weighted variant is available behind a
config flag for experimentation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .alg1 import NonFiniteLossError, TrainConfig, noise_dim
from .estimate import adjoint_y_path, eval_conjugate_cost, eval_penalty
from .nets import (
    MlpParams, adam_step, control_spec, forward, init_adam, init_mlp, lr_at,
    mlp_apply,
)
from .problems import ProblemSpec
from .report import RunReport
from .sde import (
    GraphRollout, TimeGrid, rng_for, rollout_graph, sample_increments, simulate,
)

__all__ = [
    "AltTrainConfig", "conjugate_cost", "stationarity_penalty", "train",
    "estimate_y",
]


@dataclass(frozen=True)
class AltTrainConfig(TrainConfig):
    kappa: int = 5                    # head updates per outer iteration
    dt_weighted_penalty: bool = False

    def __post_init__(self):
        super().__post_init__()
        if self.kappa < 1:
            raise ValueError("kappa must be >= 1")


def conjugate_cost(problem: ProblemSpec, roll: GraphRollout, grid: TimeGrid):
    """Cost functional with the conjugate objective as integrand (loss1)."""
    if roll.ys is None or roll.zs is None:
        raise ValueError("conjugate cost needs y/z heads on the rollout")
    total = None
    for i in range(grid.n_steps):
        c_i = problem.conjugate(
            float(grid.times[i]), roll.xs[i], roll.us[i], roll.vs[i],
            roll.ys[i], roll.zs[i],
        )
        term = ad.smul(c_i, float(grid.dt[i]))
        total = term if total is None else ad.add(total, term)
    total = ad.add(total, problem.terminal(roll.xs[-1]))
    return ad.mean(total)


def stationarity_penalty(problem: ProblemSpec, roll: GraphRollout, grid: TimeGrid,
                         dt_weighted: bool = False):
    """Squared stationarity residuals of the conjugate objective (loss2)."""
    if roll.ys is None or roll.zs is None:
        raise ValueError("stationarity penalty needs y/z heads on the rollout")
    total = None
    for i in range(grid.n_steps):
        t = float(grid.times[i])
        ry = problem.conjugate_dy(t, roll.xs[i], roll.us[i], roll.vs[i],
                                  roll.ys[i], roll.zs[i])
        rz = problem.conjugate_dz(t, roll.xs[i], roll.us[i], roll.vs[i],
                                  roll.ys[i], roll.zs[i])
        term = ad.add(ad.row_sumsq(ry), ad.row_sumsq(rz))
        if dt_weighted:
            term = ad.smul(term, float(grid.dt[i]))
        total = term if total is None else ad.add(total, term)
    return ad.mean(total)


def estimate_y(
    problem: ProblemSpec,
    params: dict,
    grid: TimeGrid,
    eval_batch: int,
    seed,
) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo y recovery through the full adjoint drift: (y0, path)."""
    batch = sample_increments(grid, eval_batch, noise_dim(problem), seed)
    traj = simulate(problem, params, grid, batch)
    path = adjoint_y_path(problem, traj, grid, kind="full")
    return path[0], path


def _split(flat: list, n_first: int) -> tuple[MlpParams, MlpParams]:
    return MlpParams.from_flat(flat[:n_first]), MlpParams.from_flat(flat[n_first:])


def _uv_step(problem, grid, batch, flat_uv, n_u, params_y, params_z, opt_uv, lr):
    """One Adam step on the control parameters against loss1."""
    tape = ad.Tape()
    variables = [tape.variable(p) for p in flat_uv]
    nets = {
        "u": (variables[0:n_u:2], variables[1:n_u:2]),
        "v": (variables[n_u::2], variables[n_u + 1::2]),
        "y": (params_y.weights, params_y.biases),
        "z": (params_z.weights, params_z.biases),
    }
    roll = rollout_graph(problem, nets, grid, batch)
    loss = conjugate_cost(problem, roll, grid)
    grads = tape.gradient(loss, variables)
    new_flat, opt_uv = adam_step(flat_uv, grads, opt_uv, lr)
    return new_flat, opt_uv, float(loss.value), roll


def _yz_step(problem, grid, batch, params_uv, flat_yz, n_y, opt_yz, lr,
             dt_weighted):
    """One Adam step on the head parameters against loss2 on a fresh rollout.

    The state and controls are frozen for this step, so they are simulated
    gradient-free and enter the penalty graph as constants.
    """
    traj = simulate(problem, params_uv, grid, batch)
    m_samples = traj.x.shape[0]
    tape = ad.Tape()
    variables = [tape.variable(p) for p in flat_yz]
    w_y, b_y = variables[0:n_y:2], variables[1:n_y:2]
    w_z, b_z = variables[n_y::2], variables[n_y + 1::2]
    total = None
    for i in range(grid.n_steps):
        t = float(grid.times[i])
        inp = ad.concat_cols(ad.tensor(np.full((m_samples, 1), t)),
                             ad.tensor(traj.x[:, i]))
        y_i = mlp_apply(w_y, b_y, inp)
        z_i = mlp_apply(w_z, b_z, inp)
        ry = problem.conjugate_dy(t, traj.x[:, i], traj.u[:, i], traj.v[:, i],
                                  y_i, z_i)
        rz = problem.conjugate_dz(t, traj.x[:, i], traj.u[:, i], traj.v[:, i],
                                  y_i, z_i)
        term = ad.add(ad.row_sumsq(ry), ad.row_sumsq(rz))
        if dt_weighted:
            term = ad.smul(term, float(grid.dt[i]))
        total = term if total is None else ad.add(total, term)
    loss = ad.mean(total)
    grads = tape.gradient(loss, variables)
    new_flat, opt_yz = adam_step(flat_yz, grads, opt_yz, lr)
    return new_flat, opt_yz, float(loss.value)


def train(problem: ProblemSpec, config: AltTrainConfig) -> RunReport:
    """Alternating training loop; deterministic given (problem, config)."""
    t_start = time.perf_counter()
    spec = control_spec(problem.n)
    params = {
        role: init_mlp(spec, rng_for(config.seed, idx))
        for idx, role in enumerate(["u", "v", "y", "z"])
    }
    flat_uv = params["u"].flat() + params["v"].flat()
    flat_yz = params["y"].flat() + params["z"].flat()
    n_u = len(params["u"].flat())
    n_y = len(params["y"].flat())
    opt_uv = init_adam(flat_uv)
    opt_yz = init_adam(flat_yz)
    schedule = config.resolved_schedule()
    grid = TimeGrid.uniform(problem.horizon, config.n_steps)
    d = noise_dim(problem)

    losses1 = np.empty(config.maxstep)
    losses2 = np.empty(config.maxstep)
    lrs = np.empty(config.maxstep)
    y0_curve = np.empty(config.maxstep)
    for step in range(config.maxstep):
        lr = lr_at(schedule, step)
        batch = sample_increments(
            grid, config.batch_size, d, [config.seed, 4, step, 0]
        )
        params_y, params_z = _split(flat_yz, n_y)
        flat_uv, opt_uv, l1, roll = _uv_step(
            problem, grid, batch, flat_uv, n_u, params_y, params_z, opt_uv, lr
        )
        if not np.isfinite(l1):
            raise NonFiniteLossError(
                f"loss1 became non-finite at iteration ({step}, 0)"
            )
        losses1[step] = l1
        lrs[step] = lr
        y0_curve[step] = adjoint_y_path(
            problem, roll.stacked(), grid, kind="full"
        )[0, 0]

        params_u, params_v = _split(flat_uv, n_u)
        params_uv = {"u": params_u, "v": params_v}
        l2 = np.nan
        for k in range(1, config.kappa + 1):
            batch = sample_increments(
                grid, config.batch_size, d, [config.seed, 4, step, k]
            )
            flat_yz, opt_yz, l2 = _yz_step(
                problem, grid, batch, params_uv, flat_yz, n_y, opt_yz, lr,
                config.dt_weighted_penalty,
            )
            if not np.isfinite(l2):
                raise NonFiniteLossError(
                    f"loss2 became non-finite at iteration ({step}, {k})"
                )
        losses2[step] = l2

    params_u, params_v = _split(flat_uv, n_u)
    params_y, params_z = _split(flat_yz, n_y)
    final = {"u": params_u, "v": params_v, "y": params_y, "z": params_z}
    eval_batch = sample_increments(grid, config.eval_batch, d, [config.seed, 5])
    traj = simulate(problem, final, grid, eval_batch)
    path = adjoint_y_path(problem, traj, grid, kind="full")
    return RunReport(
        seed=config.seed,
        losses=losses1,
        lrs=lrs,
        y0_curve=y0_curve,
        y0=path[0],
        y0_path=path,
        eval_loss=eval_conjugate_cost(problem, traj, grid),
        wall_clock_s=time.perf_counter() - t_start,
        params=final,
        losses2=losses2,
        eval_loss2=eval_penalty(problem, traj, grid, config.dt_weighted_penalty),
        y0_readout=np.asarray(forward(params_y, 0.0, problem.x0).value),
    )
