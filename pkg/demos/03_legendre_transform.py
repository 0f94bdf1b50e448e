"""The running cost as a numerical Legendre-Fenchel transform.

For the LQ problem the transform has the closed form |u - x|^2 + |v|^2 / 4;
the damped-Newton maximizer recovers it (and the maximizing y, z) without
using that formula, which is how problems without a closed form are handled.
"""

import numpy as np

from hamsoc.problems import example1, example3, legendre_numeric

p = example1(3, 0.5)
rng = np.random.default_rng(1)
x, u, v = rng.normal(size=(3, 3))
value, y_star, z_star = legendre_numeric(p, 0.0, x, u, v)
explicit = float(p.running_cost(0.0, x[None], u[None], v[None]).value[0])
print(f"numeric transform: {value:.10f}")
print(f"closed form:       {explicit:.10f}")
print(f"maximizer y* vs 2(u - x): {np.max(np.abs(y_star - 2 * (u - x))):.2e}")
print(f"maximizer z* vs v/2:      {np.max(np.abs(z_star - 0.5 * v)):.2e}")

p3 = example3(3)
x3 = np.full(3, 0.4)
u3, v3 = rng.normal(size=(2, 3)) * 0.3
value3, y3, z3 = legendre_numeric(p3, 0.0, x3, u3, v3)
print(f"\nexponential-drift problem (no closed form): f(t,x,u,v) = {value3:.6f}")
print(f"stationary y* = {np.round(y3, 4)}")
