"""Feedforward control networks, Adam, and the piecewise learning-rate decay.

Every control is one network shared across all time points: the input is the
time prepended to the state, ``(t, x) in R^(n+1)``, followed by ELU hidden
layers and an affine output.  Weight matrices are stored ``(fan_out, fan_in)``
so layer i of a width-``(n+10)`` network over an n-dim state has shape
``(n+10, n+1)``, ``(n+10, n+10)``, ..., ``(out, n+10)``.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad

__all__ = [
    "MlpSpec", "MlpParams", "AdamState", "LrSchedule", "NonFiniteGradientError",
    "control_spec", "init_mlp", "mlp_apply", "mlp_forward", "forward",
    "init_adam", "adam_step", "lr_at", "default_schedule",
    "save_params", "load_params",
]

CHECKPOINT_VERSION = 1


class NonFiniteGradientError(RuntimeError):
    """A gradient contained NaN/Inf; the training step is aborted."""


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    hidden_dims: tuple[int, ...]
    output_dim: int

    def __post_init__(self):
        if self.input_dim <= 0 or self.output_dim <= 0 or any(
            h <= 0 for h in self.hidden_dims
        ):
            raise ValueError(f"zero-dimension layer in {self}")

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        """(fan_out, fan_in) per affine layer."""
        dims = [self.input_dim, *self.hidden_dims, self.output_dim]
        return [(dims[i + 1], dims[i]) for i in range(len(dims) - 1)]


def control_spec(n: int, output_dim: int | None = None) -> MlpSpec:
    """Default architecture: (n+1)-in, three (n+10) hidden layers, n-out."""
    return MlpSpec(n + 1, (n + 10, n + 10, n + 10), output_dim or n)


@dataclass
class MlpParams:
    weights: list[np.ndarray]  # each (d_i, d_{i-1})
    biases: list[np.ndarray]   # each (d_i,)

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def flat(self) -> list[np.ndarray]:
        """Interleaved [w0, b0, w1, b1, ...]; the optimizer's parameter list."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    @staticmethod
    def from_flat(flat: list[np.ndarray]) -> "MlpParams":
        return MlpParams(list(flat[0::2]), list(flat[1::2]))


def init_mlp(spec: MlpSpec, rng: np.random.Generator) -> MlpParams:
    """Glorot-uniform weights, zero biases; deterministic given the generator."""
    weights, biases = [], []
    for fan_out, fan_in in spec.layer_dims:
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-lim, lim, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases)


def mlp_apply(weights, biases, inp):
    """Run the affine/ELU stack on an already-assembled (M, in_dim) input."""
    h = inp
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        h = ad.affine(h, w, b)
        if i < last:
            h = ad.elu(h)
    return h


def mlp_forward(weights, biases, t: float, x):
    """Run the stack on input concat([t], x); entries may be Tensors or arrays.

    ``x`` is a (M, n) batch or a single (n,) state; time enters as an extra
    input column shared by all rows.
    """
    squeeze = False
    if isinstance(x, ad.Tensor):
        if x.value.ndim == 1:
            if x.tape is not None:
                raise ad.ShapeError("mlp_forward: 1-D input only supported tape-free")
            x = x.value
    if not isinstance(x, ad.Tensor) and np.ndim(x) == 1:
        x = np.asarray(x, dtype=np.float64)[None, :]
        squeeze = True
    xv = x.value if isinstance(x, ad.Tensor) else x
    tcol = np.full((xv.shape[0], 1), float(t))
    h = mlp_apply(weights, biases, ad.concat_cols(ad.tensor(tcol), x))
    if squeeze and h.tape is None:
        return ad.tensor(h.value[0])
    return h


def forward(params: MlpParams, t: float, x):
    """Gradient-free network evaluation."""
    return mlp_forward(params.weights, params.biases, t, x)


# -------------------------------------------------------------------- Adam

@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_adam(params: list[np.ndarray], beta1=0.9, beta2=0.999, eps=1e-8) -> AdamState:
    return AdamState(
        [np.zeros_like(p) for p in params],
        [np.zeros_like(p) for p in params],
        0, beta1, beta2, eps,
    )


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected Adam update; returns fresh params and state."""
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params/grads/state length mismatch")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ValueError(f"grad shape {g.shape} != param shape {p.shape}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(
                f"non-finite gradient for parameter of shape {p.shape}"
            )
    t = state.t + 1
    b1, b2, eps = state.beta1, state.beta2, state.eps
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    new_m, new_v, new_p = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        step = lr * (m / c1) / (np.sqrt(v / c2) + eps)
        new_m.append(m)
        new_v.append(v)
        new_p.append(p - step)
    return new_p, AdamState(new_m, new_v, t, b1, b2, eps)


# ------------------------------------------------------------- LR schedule

@dataclass(frozen=True)
class LrSchedule:
    boundaries: tuple[int, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(self.boundaries) + 1:
            raise ValueError("need len(values) == len(boundaries) + 1")
        if any(v <= 0 for v in self.values):
            raise ValueError("learning rates must be positive")
        if any(a < b for a, b in zip(self.values, self.values[1:])):
            raise ValueError("learning rates must be non-increasing")
        if any(a >= b for a, b in zip(self.boundaries, self.boundaries[1:])):
            raise ValueError("boundaries must be strictly increasing")


def lr_at(schedule: LrSchedule, step: int) -> float:
    """Rate of the piece containing `step`; a boundary starts the next piece."""
    if step < 0:
        raise ValueError("step must be >= 0")
    return schedule.values[bisect_right(schedule.boundaries, step)]


def default_schedule(maxstep: int) -> LrSchedule:
    """3e-3 -> 2e-3 -> 1e-3, switching at 30% and 60% of the step budget."""
    b1 = max(1, int(0.3 * maxstep))
    b2 = max(b1 + 1, int(0.6 * maxstep))
    return LrSchedule((b1, b2), (3e-3, 2e-3, 1e-3))


# ------------------------------------------------------------- checkpoints

def save_params(params: MlpParams, path: str) -> None:
    """Write a checkpoint; `.npz` is bit-exact, `.json` is value-exact."""
    if path.endswith(".npz"):
        payload = {"version": np.int64(CHECKPOINT_VERSION),
                   "n_layers": np.int64(len(params.weights))}
        for i, (w, b) in enumerate(zip(params.weights, params.biases)):
            payload[f"w{i}"] = w
            payload[f"b{i}"] = b
        np.savez(path, **payload)
    elif path.endswith(".json"):
        doc = {
            "format": "hamsoc-mlp",
            "version": CHECKPOINT_VERSION,
            "weights": [w.tolist() for w in params.weights],
            "biases": [b.tolist() for b in params.biases],
        }
        with open(path, "w") as fh:
            json.dump(doc, fh)
    else:
        raise ValueError(f"unknown checkpoint extension: {path}")


def load_params(path: str) -> MlpParams:
    if path.endswith(".npz"):
        with np.load(path) as data:
            version = int(data["version"])
            if version != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {version}")
            n = int(data["n_layers"])
            return MlpParams(
                [data[f"w{i}"].copy() for i in range(n)],
                [data[f"b{i}"].copy() for i in range(n)],
            )
    if path.endswith(".json"):
        with open(path) as fh:
            doc = json.load(fh)
        if doc.get("format") != "hamsoc-mlp" or doc.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unrecognized checkpoint header in {path}")
        return MlpParams(
            [np.asarray(w, dtype=np.float64) for w in doc["weights"]],
            [np.asarray(b, dtype=np.float64) for b in doc["biases"]],
        )
    raise ValueError(f"unknown checkpoint extension: {path}")
