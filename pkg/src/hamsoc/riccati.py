"""Independent ground truth for the linear-quadratic example.

The LQ system admits a linear feedback y_t = -K_t x_t where K solves the
matrix ODE  K' = K^2/2 - 2K  backward from K(T) = Q, and the optimal
diffusion feedback is identically zero (so a converged solver should learn
v ~ 0).  Two routes are provided: classical RK4 on the matrix equation, and
the scalar closed form applied through Q's eigenstructure.  For the coupling
matrix with unit diagonal and constant off-diagonal lam, the eigenvalues are
``1 + (n-1) lam`` along the all-ones direction and ``1 - lam`` on its
orthogonal complement, and the scalar flow per eigenvalue integrates to

    k(0) = 4 / (1 - ((q - 4) / q) * exp(-2 T)),   k(T) = q.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problems import lq_terminal_matrix

__all__ = [
    "RiccatiSolution", "solve_riccati_rk4", "riccati_closed_form_scalar",
    "benchmark_y0", "LQ_OPTIMAL_V_GAIN",
]

# the optimal diffusion control of the LQ example vanishes identically
LQ_OPTIMAL_V_GAIN = 0.0

DIVERGENCE_LIMIT = 1e6


@dataclass(frozen=True)
class RiccatiSolution:
    k0: np.ndarray
    method: str
    trajectory: "list[np.ndarray] | None" = None


def _flow(k: np.ndarray) -> np.ndarray:
    # dK/ds for s = T - t: the backward equation K' = K^2/2 - 2K reversed
    return 2.0 * k - 0.5 * (k @ k)


def solve_riccati_rk4(
    q_mat: np.ndarray, horizon: float, steps: int, keep_trajectory: bool = False
) -> RiccatiSolution:
    """Integrate the feedback matrix from t=T back to t=0 with classical RK4.

    Accepts one (n, n) terminal matrix or a stack (..., n, n); stacked
    instances integrate independently in one vectorized sweep.
    """
    q_mat = np.asarray(q_mat, dtype=np.float64)
    if q_mat.ndim < 2 or q_mat.shape[-1] != q_mat.shape[-2]:
        raise ValueError(f"need square matrices, got shape {q_mat.shape}")
    if not np.allclose(q_mat, np.swapaxes(q_mat, -1, -2), atol=1e-12):
        raise ValueError("terminal matrix must be symmetric")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    h = horizon / steps
    k = q_mat.copy()
    traj = [k.copy()] if keep_trajectory else None
    for _ in range(steps):
        k1 = _flow(k)
        k2 = _flow(k + 0.5 * h * k1)
        k3 = _flow(k + 0.5 * h * k2)
        k4 = _flow(k + h * k3)
        k = k + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if np.max(np.abs(k)) > DIVERGENCE_LIMIT:
            raise RuntimeError("Riccati integration diverged (|K| > 1e6)")
        if keep_trajectory:
            traj.append(k.copy())
    return RiccatiSolution(k0=k, method="rk4", trajectory=traj)


def riccati_closed_form_scalar(q: float, horizon: float) -> float:
    """Exact k(0) of the scalar flow k' = k^2/2 - 2k with k(T) = q."""
    if q == 0.0:
        raise ValueError("q = 0 is the degenerate equilibrium; no closed form")
    denom = 1.0 - ((q - 4.0) / q) * np.exp(-2.0 * horizon)
    if denom == 0.0:
        raise ValueError(f"closed form has a pole for q={q}, T={horizon}")
    return 4.0 / denom


def benchmark_y0(n: int, lam: float, a=None, horizon: float = 0.1) -> np.ndarray:
    """Benchmark value y(0) = -K(0) a via Q's exact eigenstructure.

    Works for any initial state: a is split into its all-ones component and
    the orthogonal remainder, and the scalar closed form is applied on each
    eigenvalue (the matrix flow preserves Q's eigenbasis).
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    a = np.ones(n) if a is None else np.asarray(a, dtype=np.float64)
    q_par = 1.0 + (n - 1) * lam
    q_perp = 1.0 - lam
    k_par = riccati_closed_form_scalar(q_par, horizon)
    # at lam = 1 the complement eigenvalue is the equilibrium k = 0
    k_perp = 0.0 if q_perp == 0.0 else riccati_closed_form_scalar(q_perp, horizon)
    a_par = np.full(n, a.mean())
    a_perp = a - a_par
    return -(k_par * a_par + k_perp * a_perp)
