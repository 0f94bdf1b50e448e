"""Ground truth for the linear-quadratic problem, two independent ways.

The LQ system admits an exact linear feedback y = -K x.  We integrate the
matrix equation K' = K^2/2 - 2K backward from K(T) = Q with classical RK4
and compare with the scalar closed form applied through Q's eigenstructure.
"""

import numpy as np

from hamsoc.problems import lq_terminal_matrix
from hamsoc.riccati import benchmark_y0, riccati_closed_form_scalar, solve_riccati_rk4

print("Closed form per eigenvalue, k(0) = 4 / (1 - ((q-4)/q) e^{-2T}):")
for q in (1.0, 20.8, 40.6, 60.4, 80.2, 100.0):
    print(f"  q = {q:6.1f}  ->  k(0) = {riccati_closed_form_scalar(q, 0.1):.6f}")

print("\nReference column at n = 100, T = 0.1 (first component of -K(0) a):")
for lam in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
    y0 = benchmark_y0(100, lam, horizon=0.1)
    print(f"  coupling {lam:.1f}  ->  y0 = {y0[0]:+.6f}")

print("\nCross-check against matrix RK4 (n = 7, coupling 0.37):")
n, lam = 7, 0.37
rk4 = solve_riccati_rk4(lq_terminal_matrix(n, lam), horizon=0.1, steps=10_000)
a = np.ones(n)
gap = np.max(np.abs(benchmark_y0(n, lam) - (-(rk4.k0 @ a))))
print(f"  max |closed-form - RK4| = {gap:.2e}")
