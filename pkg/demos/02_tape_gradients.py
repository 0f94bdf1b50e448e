"""Reverse-mode gradients from the tape, checked against finite differences.

Builds a toy two-layer network loss out of the tensor primitives, asks the
tape for d(loss)/d(weights), and verifies one entry by central differences.
"""

import numpy as np

from hamsoc import autodiff as ad

rng = np.random.default_rng(0)
x = rng.normal(size=(8, 3))
w1, b1 = rng.normal(size=(5, 3)), np.zeros(5)
w2, b2 = rng.normal(size=(1, 5)), np.zeros(1)


def loss_value(w1_, b1_, w2_, b2_):
    h = ad.elu(ad.affine(x, w1_, b1_))
    out = ad.affine(h, w2_, b2_)
    return ad.mean(ad.row_sumsq(out))


tape = ad.Tape()
vs = [tape.variable(p) for p in (w1, b1, w2, b2)]
loss = loss_value(*vs)
grads = tape.gradient(loss, vs)
print(f"loss = {loss.item():.6f}")
print(f"|dL/dw1| = {np.abs(grads[0]).max():.6f}, |dL/db2| = {np.abs(grads[3]).max():.6f}")

h = 1e-6
w1p, w1m = w1.copy(), w1.copy()
w1p[0, 0] += h
w1m[0, 0] -= h
fd = (loss_value(w1p, b1, w2, b2).item() - loss_value(w1m, b1, w2, b2).item()) / (2 * h)
print(f"dL/dw1[0,0]: tape {grads[0][0, 0]:.10f} vs finite difference {fd:.10f}")
