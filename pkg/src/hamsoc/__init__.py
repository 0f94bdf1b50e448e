"""Solvers for boundary-value stochastic Hamiltonian systems.

The forward/backward system

    dx =  H_y(t, x, y, z) dt + H_z(t, x, y, z) dB
   -dy =  H_x(t, x, y, z) dt - z dB,     x(0) = a,  y(T) = -Phi_x(x(T))

is solved by training feedforward controls on the equivalent stochastic
optimal control problem.  Two solvers cover the two shapes the running cost
can take (closed form or not), and an independent Riccati route provides
ground truth for the linear-quadratic example.
"""

from . import alg1, alg2, autodiff, estimate, experiment, nets, problems, riccati, sde
from .experiment import ExperimentConfig, aggregate, run_experiment
from .problems import ProblemSpec, example1, example2, example3, legendre_numeric
from .report import RunReport
from .riccati import benchmark_y0, riccati_closed_form_scalar, solve_riccati_rk4

__all__ = [
    "alg1", "alg2", "autodiff", "estimate", "experiment", "nets", "problems",
    "riccati", "sde",
    "ExperimentConfig", "aggregate", "run_experiment",
    "ProblemSpec", "example1", "example2", "example3", "legendre_numeric",
    "RunReport", "benchmark_y0", "riccati_closed_form_scalar", "solve_riccati_rk4",
]

__version__ = "0.1.0"
