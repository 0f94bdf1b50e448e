"""Monte-Carlo evaluation on simulated paths (no gradients involved).

The backward component y is recovered from trained controls by averaging the
integrated adjoint drift plus terminal gradient over paths:

    y(t_i) ~ mean_m [ sum_{j >= i} g(t_j, ...) dt_j - Phi_x(x_N) ]

with g the problem's y-equation drift: the explicit-cost form g(t, x, u, v)
for the two-network solver, or the full form g(t, x, u, v, y, z) when the
backward heads are networks too.  Averaging over all paths equals the
conditional expectation only at the initial time; later entries of the path
table are the same path-averaged approximation used for training curves.
"""

from __future__ import annotations

import numpy as np

from .problems import ProblemSpec
from .sde import TimeGrid, TrajectoryBatch

__all__ = [
    "adjoint_y_path", "eval_control_cost", "eval_conjugate_cost", "eval_penalty",
]


def _drift_series(problem: ProblemSpec, traj: TrajectoryBatch, grid: TimeGrid,
                  kind: str) -> list:
    n_steps = grid.n_steps
    out = []
    for i in range(n_steps):
        t = float(grid.times[i])
        if kind == "explicit":
            if problem.adjoint_drift_explicit is None:
                raise ValueError(f"{problem.name} has no explicit-cost adjoint drift")
            out.append(problem.adjoint_drift_explicit(
                t, traj.x[:, i], traj.u[:, i], traj.v[:, i]))
        elif kind == "full":
            if traj.y is None or traj.z is None:
                raise ValueError("full adjoint drift needs y/z heads on the paths")
            out.append(problem.adjoint_drift(
                t, traj.x[:, i], traj.u[:, i], traj.v[:, i],
                traj.y[:, i], traj.z[:, i]))
        else:
            raise ValueError(f"unknown adjoint drift kind {kind!r}")
    return out


def adjoint_y_path(problem: ProblemSpec, traj: TrajectoryBatch, grid: TimeGrid,
                   kind: str) -> np.ndarray:
    """Path table of y estimates, shape (N+1, n); row 0 is the y(0) estimate."""
    n_steps = grid.n_steps
    drifts = _drift_series(problem, traj, grid, kind)
    acc = -problem.terminal_dx(traj.x[:, n_steps])
    path = np.empty((n_steps + 1, problem.n))
    path[n_steps] = acc.mean(axis=0)
    dts = grid.dt
    for i in range(n_steps - 1, -1, -1):
        acc = acc + drifts[i] * dts[i]
        path[i] = acc.mean(axis=0)
    return path


def _value(x) -> np.ndarray:
    return x.value if hasattr(x, "value") else np.asarray(x)


def eval_control_cost(problem: ProblemSpec, traj: TrajectoryBatch,
                      grid: TimeGrid) -> float:
    """Discrete cost functional with the explicit running cost."""
    if problem.running_cost is None:
        raise ValueError(f"{problem.name} has no explicit running cost")
    total = _value(problem.terminal(traj.x[:, grid.n_steps])).copy()
    for i in range(grid.n_steps):
        f_i = _value(problem.running_cost(
            float(grid.times[i]), traj.x[:, i], traj.u[:, i], traj.v[:, i]))
        total += f_i * grid.dt[i]
    return float(total.mean())


def eval_conjugate_cost(problem: ProblemSpec, traj: TrajectoryBatch,
                        grid: TimeGrid) -> float:
    """Discrete cost functional with the conjugate objective in place of f."""
    if traj.y is None or traj.z is None:
        raise ValueError("conjugate cost needs y/z heads on the paths")
    total = _value(problem.terminal(traj.x[:, grid.n_steps])).copy()
    for i in range(grid.n_steps):
        c_i = _value(problem.conjugate(
            float(grid.times[i]), traj.x[:, i], traj.u[:, i], traj.v[:, i],
            traj.y[:, i], traj.z[:, i]))
        total += c_i * grid.dt[i]
    return float(total.mean())


def eval_penalty(problem: ProblemSpec, traj: TrajectoryBatch, grid: TimeGrid,
                 dt_weighted: bool = False) -> float:
    """Summed squared stationarity residuals of the conjugate objective."""
    if traj.y is None or traj.z is None:
        raise ValueError("stationarity penalty needs y/z heads on the paths")
    total = np.zeros(traj.x.shape[0])
    for i in range(grid.n_steps):
        t = float(grid.times[i])
        ry = _value(problem.conjugate_dy(
            t, traj.x[:, i], traj.u[:, i], traj.v[:, i], traj.y[:, i], traj.z[:, i]))
        rz = _value(problem.conjugate_dz(
            t, traj.x[:, i], traj.u[:, i], traj.v[:, i], traj.y[:, i], traj.z[:, i]))
        term = (ry * ry).sum(axis=1) + (rz * rz).sum(axis=1)
        total += term * grid.dt[i] if dt_weighted else term
    return float(total.mean())
