"""Hamiltonian boundary problems and their equivalent control-problem data.

A problem bundles the Hamiltonian H(t, x, y, z) (strictly convex in y and z),
the terminal potential Phi, and the coefficients of the associated controlled
state equation dx = b(t, x, u) dt + sigma(t, x, v) dB.  The running cost of
the control problem is the Legendre-Fenchel transform

    f(t, x, u, v) = max_{y,z} [ <y, b(t,x,u)> + <z, sigma(t,x,v)> - H(t,x,y,z) ]

whose pre-maximization integrand we call the conjugate objective.  Problems
with a closed-form f expose it (plus partials and the maximizing (y, z)); the
exponential-drift example does not and is handled through the conjugate
objective and its stationarity residuals only.

Batch convention: all maps take (M, n) arrays (or tensors) per argument and
return (M,) for scalars, (M, n) for vectors.  Every map also accepts plain
numpy input and then costs only the numpy kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import autodiff as ad
from .autodiff import inner, mul, row_sumsq, smul

__all__ = [
    "ProblemSpec", "SingularStateError", "ConvergenceError",
    "example1", "example2", "example3", "legendre_numeric", "lq_terminal_matrix",
]

TRIG_GUARD = 1e-8


class SingularStateError(ValueError):
    """A state component hit a zero of cos/sin where a transform map divides."""


class ConvergenceError(RuntimeError):
    """Numeric inner maximization failed to reach the residual tolerance."""


@dataclass(frozen=True)
class ProblemSpec:
    """One Hamiltonian boundary problem plus its control-problem data.

    Maps suffixed ``_dx``/``_dy``/... are plain-numpy partial derivatives
    used by estimators and tests; un-suffixed maps are tensor-aware and may
    appear inside training graphs.
    """

    name: str
    n: int
    d: int
    diagonal_noise: bool       # True: d == n and sigma acts componentwise on dB
    horizon: float
    x0: np.ndarray

    hamiltonian: Callable      # (t, x, y, z) -> (M,)
    hamiltonian_dx: Callable   # numpy (t, x, y, z) -> (M, n)
    hamiltonian_dy: Callable
    hamiltonian_dz: Callable

    terminal: Callable         # (x) -> (M,)
    terminal_dx: Callable      # numpy (x) -> (M, n)

    drift: Callable            # (t, x, u) -> (M, n)
    diffusion: Callable        # (t, x, v) -> (M, n)

    conjugate_dy: Callable     # (t, x, u, v, y, z) -> (M, n), tensor-aware
    conjugate_dz: Callable
    conjugate_dx: Callable     # numpy

    adjoint_drift: Callable    # numpy (t, x, u, v, y, z) -> (M, n); y-BSDE drift

    running_cost: Optional[Callable] = None      # (t, x, u, v) -> (M,)
    running_cost_dx: Optional[Callable] = None   # numpy
    running_cost_du: Optional[Callable] = None
    running_cost_dv: Optional[Callable] = None
    adjoint_drift_explicit: Optional[Callable] = None  # numpy (t, x, u, v) -> (M, n)
    conjugate_maximizer: Optional[Callable] = None     # numpy (t, x, u, v) -> (y, z)

    params: dict = field(default_factory=dict)

    @property
    def has_explicit_cost(self) -> bool:
        return self.running_cost is not None

    def conjugate(self, t, x, u, v, y, z):
        """<y, b> + <z, sigma> - H; the objective whose max over (y, z) is f."""
        return (
            inner(y, self.drift(t, x, u))
            + inner(z, self.diffusion(t, x, v))
            - self.hamiltonian(t, x, y, z)
        )


def lq_terminal_matrix(n: int, lam: float) -> np.ndarray:
    """Unit diagonal with constant off-diagonal coupling lam."""
    return lam * np.ones((n, n)) + (1.0 - lam) * np.eye(n)


def _as_array(x) -> np.ndarray:
    return x.value if isinstance(x, ad.Tensor) else np.asarray(x, dtype=np.float64)


def example1(n: int, lam: float, horizon: float = 0.1, x0=None) -> ProblemSpec:
    """Linear-quadratic system driven by scalar noise.

    H = <x, y> + |y|^2/4 + |z|^2 with terminal Phi = <Q x, x>/2, so the
    control problem has b = u, sigma = v and the closed-form running cost
    f = |u - x|^2 + |v|^2/4.  The coupling matrix Q has ones on the diagonal
    and ``lam`` elsewhere.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    q_mat = lq_terminal_matrix(n, lam)
    a = np.ones(n) if x0 is None else np.asarray(x0, dtype=np.float64)

    def hamiltonian(t, x, y, z):
        return inner(x, y) + smul(row_sumsq(y), 0.25) + row_sumsq(z)

    def terminal(x):
        return smul(inner(x, ad.matmul(x, ad.tensor(q_mat))), 0.5)

    return ProblemSpec(
        name="example1",
        n=n,
        d=1,
        diagonal_noise=False,
        horizon=horizon,
        x0=a,
        hamiltonian=hamiltonian,
        hamiltonian_dx=lambda t, x, y, z: np.array(y, copy=True),
        hamiltonian_dy=lambda t, x, y, z: x + 0.5 * y,
        hamiltonian_dz=lambda t, x, y, z: 2.0 * z,
        terminal=terminal,
        terminal_dx=lambda x: x @ q_mat,
        drift=lambda t, x, u: u,
        diffusion=lambda t, x, v: v,
        conjugate_dy=lambda t, x, u, v, y, z: u - x - smul(y, 0.5),
        conjugate_dz=lambda t, x, u, v, y, z: v - smul(z, 2.0),
        conjugate_dx=lambda t, x, u, v, y, z: -_as_array(y),
        adjoint_drift=lambda t, x, u, v, y, z: np.array(_as_array(y), copy=True),
        running_cost=lambda t, x, u, v: row_sumsq(u - x) + smul(row_sumsq(v), 0.25),
        running_cost_dx=lambda t, x, u, v: -2.0 * (u - x),
        running_cost_du=lambda t, x, u, v: 2.0 * (u - x),
        running_cost_dv=lambda t, x, u, v: 0.5 * v,
        adjoint_drift_explicit=lambda t, x, u, v: 2.0 * (u - x),
        conjugate_maximizer=lambda t, x, u, v: (2.0 * (u - x), 0.5 * v),
        params={"lambda": lam},
    )


def _guard_trig(c: np.ndarray, s: np.ndarray):
    if np.any(np.abs(c) < TRIG_GUARD) or np.any(np.abs(s) < TRIG_GUARD):
        raise SingularStateError(
            "state hit a zero of cos or sin; transform maps are singular there"
        )


def example2(n: int, horizon: float = 0.1, x0=None) -> ProblemSpec:
    """Trigonometric system with state-dependent drift and diagonal noise.

    H = <y, y o cos^2 x>/2 + <z, z o sin^2 x>/2 + <y, cos x> + <z, sin x>
        - <x, x>/2, Phi = <x, x>/2.  The control system uses
    b = cos x o (u + 1) and sigma = sin x o (v + 1) (componentwise on an
    n-dim Brownian motion), giving f = (|x|^2 + |u|^2 + |v|^2)/2 with
    maximizer y = u / cos x, z = v / sin x.
    """
    a = np.ones(n) if x0 is None else np.asarray(x0, dtype=np.float64)

    def hamiltonian(t, x, y, z):
        c, s = ad.cos(x), ad.sin(x)
        return (
            smul(inner(y, mul(y, mul(c, c))), 0.5)
            + smul(inner(z, mul(z, mul(s, s))), 0.5)
            + inner(y, c)
            + inner(z, s)
            - smul(row_sumsq(x), 0.5)
        )

    def hamiltonian_dx(t, x, y, z):
        c, s = np.cos(x), np.sin(x)
        return (z * z - y * y) * s * c - y * s + z * c - x

    def drift(t, x, u):
        return mul(ad.cos(x), u + 1.0)

    def diffusion(t, x, v):
        return mul(ad.sin(x), v + 1.0)

    def conjugate_dy(t, x, u, v, y, z):
        c = ad.cos(x)
        return mul(c, u) - mul(y, mul(c, c))

    def conjugate_dz(t, x, u, v, y, z):
        s = ad.sin(x)
        return mul(s, v) - mul(z, mul(s, s))

    def conjugate_dx(t, x, u, v, y, z):
        x, u, v = _as_array(x), _as_array(u), _as_array(v)
        y, z = _as_array(y), _as_array(z)
        c, s = np.cos(x), np.sin(x)
        return -y * s * (u + 1.0) + z * c * (v + 1.0) - hamiltonian_dx(t, x, y, z)

    def adjoint_drift(t, x, u, v, y, z):
        # gradient of <y,b> + <z,sigma> - f in x; the y-equation drift for
        # this state-dependent b, sigma (reduces to -f_x only when b=u, sigma=v)
        return -y * np.sin(x) * (u + 1.0) + z * np.cos(x) * (v + 1.0) - x

    def adjoint_drift_explicit(t, x, u, v):
        c, s = np.cos(x), np.sin(x)
        _guard_trig(c, s)
        return -u * np.tan(x) * (u + 1.0) + v * (c / s) * (v + 1.0) - x

    def conjugate_maximizer(t, x, u, v):
        c, s = np.cos(x), np.sin(x)
        _guard_trig(c, s)
        return u / c, v / s

    return ProblemSpec(
        name="example2",
        n=n,
        d=n,
        diagonal_noise=True,
        horizon=horizon,
        x0=a,
        hamiltonian=hamiltonian,
        hamiltonian_dx=hamiltonian_dx,
        hamiltonian_dy=lambda t, x, y, z: y * np.cos(x) ** 2 + np.cos(x),
        hamiltonian_dz=lambda t, x, y, z: z * np.sin(x) ** 2 + np.sin(x),
        terminal=lambda x: smul(row_sumsq(x), 0.5),
        terminal_dx=lambda x: np.array(x, copy=True),
        drift=drift,
        diffusion=diffusion,
        conjugate_dy=conjugate_dy,
        conjugate_dz=conjugate_dz,
        conjugate_dx=conjugate_dx,
        adjoint_drift=adjoint_drift,
        running_cost=lambda t, x, u, v: smul(
            row_sumsq(x) + row_sumsq(u) + row_sumsq(v), 0.5
        ),
        running_cost_dx=lambda t, x, u, v: np.array(x, copy=True),
        running_cost_du=lambda t, x, u, v: np.array(u, copy=True),
        running_cost_dv=lambda t, x, u, v: np.array(v, copy=True),
        adjoint_drift_explicit=adjoint_drift_explicit,
        conjugate_maximizer=conjugate_maximizer,
    )


def example3(n: int, horizon: float = 0.2, x0=None) -> ProblemSpec:
    """Exponential-drift system; the running cost has no closed form.

    H = log(sum_i exp(y_i)) + |y|^2/2 + |z|^2 + <z, x> + |x|^2/5 with
    Phi = <x, x>/2; the control system is b = u, sigma = v on diagonal noise.
    Only the conjugate objective and its partials are available, so the
    constrained (four-network) solver applies but the explicit-cost one
    does not.
    """
    a = 0.5 * np.ones(n) if x0 is None else np.asarray(x0, dtype=np.float64)

    def hamiltonian(t, x, y, z):
        return (
            ad.logsumexp(y)
            + smul(row_sumsq(y), 0.5)
            + row_sumsq(z)
            + inner(z, x)
            + smul(row_sumsq(x), 0.2)
        )

    def _softmax(y):
        e = np.exp(y - y.max(axis=-1, keepdims=True))
        return e / e.sum(axis=-1, keepdims=True)

    def conjugate_dy(t, x, u, v, y, z):
        return u - ad.softmax(y) - y

    def conjugate_dz(t, x, u, v, y, z):
        return v - smul(z, 2.0) - x

    return ProblemSpec(
        name="example3",
        n=n,
        d=n,
        diagonal_noise=True,
        horizon=horizon,
        x0=a,
        hamiltonian=hamiltonian,
        hamiltonian_dx=lambda t, x, y, z: z + 0.4 * x,
        hamiltonian_dy=lambda t, x, y, z: _softmax(y) + y,
        hamiltonian_dz=lambda t, x, y, z: 2.0 * z + x,
        terminal=lambda x: smul(row_sumsq(x), 0.5),
        terminal_dx=lambda x: np.array(x, copy=True),
        drift=lambda t, x, u: u,
        diffusion=lambda t, x, v: v,
        conjugate_dy=conjugate_dy,
        conjugate_dz=conjugate_dz,
        conjugate_dx=lambda t, x, u, v, y, z: -_as_array(z) - 0.4 * _as_array(x),
        adjoint_drift=lambda t, x, u, v, y, z: _as_array(z) + 0.4 * _as_array(x),
    )


def legendre_numeric(
    problem: ProblemSpec,
    t: float,
    x: np.ndarray,
    u: np.ndarray,
    v: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 100,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Evaluate the running cost by maximizing the conjugate objective.

    Damped Newton on the stationarity system (both partials in (y, z) zero)
    with a finite-difference Jacobian, falling back to gradient ascent when a
    Newton step fails to shrink the residual.  Intended as a test oracle for
    the closed-form costs, and as the only route for problems without one.
    """
    n = problem.n
    x = np.asarray(x, dtype=np.float64)[None, :]
    u = np.asarray(u, dtype=np.float64)[None, :]
    v = np.asarray(v, dtype=np.float64)[None, :]

    def residual(w: np.ndarray) -> np.ndarray:
        y, z = w[:n][None, :], w[n:][None, :]
        ry = _as_array(problem.conjugate_dy(t, x, u, v, y, z))[0]
        rz = _as_array(problem.conjugate_dz(t, x, u, v, y, z))[0]
        return np.concatenate([ry, rz])

    w = np.zeros(2 * n)
    r = residual(w)
    h = 1e-6
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol:
            break
        jac = np.empty((2 * n, 2 * n))
        for j in range(2 * n):
            wp, wm = w.copy(), w.copy()
            wp[j] += h
            wm[j] -= h
            jac[:, j] = (residual(wp) - residual(wm)) / (2.0 * h)
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            step = r  # ascent direction for the concave objective
        # backtrack until the residual shrinks
        scale, improved = 1.0, False
        for _ in range(30):
            cand = w + scale * step
            rc = residual(cand)
            if np.max(np.abs(rc)) < np.max(np.abs(r)):
                w, r, improved = cand, rc, True
                break
            scale *= 0.5
        if not improved:
            w = w + 1e-2 * r  # plain gradient ascent fallback
            r = residual(w)
    if not np.max(np.abs(r)) < tol:
        raise ConvergenceError(
            f"inner maximization stalled at residual {np.max(np.abs(r)):.3e}"
        )
    y, z = w[:n][None, :], w[n:][None, :]
    value = float(_as_array(problem.conjugate(t, x, u, v, y, z))[0])
    return value, w[:n].copy(), w[n:].copy()
