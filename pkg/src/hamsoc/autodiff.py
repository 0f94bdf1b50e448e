"""Dense float64 tensors with reverse-mode automatic differentiation.

Evaluation is eager: every op computes its numpy result immediately and,
when any input belongs to a live :class:`Tape`, records a backward closure
on that tape.  Calling an op on plain arrays (or tensors without a tape)
costs only the numpy kernel, so the same math code serves both training
graphs and gradient-free Monte-Carlo evaluation.

Shapes are explicit: there is no general broadcasting.  Batched quantities
are 2-D ``(M, k)`` arrays (one Monte-Carlo sample per row), per-sample
scalars are 1-D ``(M,)`` and reductions produce 0-d arrays.  The primitive
set is exactly what the solvers' losses need, which keeps every backward
rule small enough to audit by eye.

Tensors are immutable (the wrapped array is marked read-only) and may be
shared freely; a Tape must only ever be written by one training loop.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor", "Tape", "ShapeError", "DomainError", "TapeError",
    "tensor", "add", "sub", "neg", "mul", "smul", "sadd", "scale_rows",
    "matmul", "affine", "elu", "cos", "sin", "tan", "exp", "log",
    "logsumexp", "softmax", "row_sum", "row_sumsq", "inner",
    "total_sum", "mean", "concat_cols",
]


class ShapeError(ValueError):
    """Operand shapes incompatible with the primitive being applied."""


class DomainError(ValueError):
    """Input outside a primitive's mathematical domain (e.g. log of x <= 0)."""


class TapeError(RuntimeError):
    """Misuse of the tape: mixed tapes, non-scalar output, unknown tensor."""


class Tensor:
    """Immutable float64 array, optionally attached to a tape node."""

    __slots__ = ("value", "tape", "_id")

    # keep numpy from absorbing us in mixed expressions; defer to __r*__ methods
    __array_ufunc__ = None

    def __init__(self, value: np.ndarray, tape: "Tape | None" = None):
        value = np.asarray(value)  # ufuncs on 0-d inputs hand back array scalars
        self.value = value
        self.tape = tape
        self._id = tape._new_id() if tape is not None else None
        value.flags.writeable = False

    @property
    def shape(self):
        return self.value.shape

    def item(self) -> float:
        return float(self.value)

    def __repr__(self):
        return f"Tensor(shape={self.value.shape}, tape={self.tape is not None})"

    # arithmetic sugar; scalars and arrays are wrapped as constants
    def __add__(self, other):
        if isinstance(other, (int, float)):
            return sadd(self, float(other))
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            return sadd(self, -float(other))
        return sub(self, other)

    def __rsub__(self, other):
        if isinstance(other, (int, float)):
            return sadd(neg(self), float(other))
        return sub(other, self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return smul(self, float(other))
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


class Tape:
    """Ordered record of primitive applications for one gradient query.

    Nodes are appended in execution order, so the list is already a
    topological order and the backward sweep is a single reversed pass.
    """

    def __init__(self):
        self._nodes = []          # (out_id, ((input_id, vjp), ...))
        self._watched = {}        # id -> leaf Tensor
        self._count = 0

    def _new_id(self) -> int:
        i = self._count
        self._count += 1
        return i

    def variable(self, value) -> Tensor:
        """Register a watched leaf (a trainable parameter)."""
        arr = np.array(value, dtype=np.float64)
        t = Tensor(arr, self)
        self._watched[t._id] = t
        return t

    def _record(self, out_id, backs):
        self._nodes.append((out_id, backs))

    def gradient(self, output: Tensor, wrt: list[Tensor]) -> list[np.ndarray]:
        """d(output)/d(w) for each watched leaf w; zeros where unreached."""
        if output.tape is not self:
            raise TapeError("output tensor was not computed on this tape")
        if output.value.shape != ():
            raise TapeError(
                f"gradient needs a scalar output, got shape {output.value.shape}"
            )
        for t in wrt:
            if t.tape is not self or t._id not in self._watched:
                raise TapeError("gradient target is not a variable of this tape")
        grads = {output._id: np.ones((), dtype=np.float64)}
        for out_id, backs in reversed(self._nodes):
            g = grads.pop(out_id, None)
            if g is None:
                continue
            for in_id, vjp in backs:
                gi = vjp(g)
                cur = grads.get(in_id)
                grads[in_id] = gi if cur is None else cur + gi
        return [
            np.asarray(grads[t._id]) if t._id in grads else np.zeros_like(t.value)
            for t in wrt
        ]


def tensor(value) -> Tensor:
    """Wrap a scalar/array as a constant (tape-free) tensor."""
    if isinstance(value, Tensor):
        return value
    return Tensor(np.array(value, dtype=np.float64))


def _wrap(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=np.float64) + 0.0)  # own a fresh buffer


def _tape_of(op: str, *ts: Tensor) -> "Tape | None":
    tape = None
    for t in ts:
        if t.tape is not None:
            if tape is None:
                tape = t.tape
            elif tape is not t.tape:
                raise TapeError(f"{op}: operands belong to different tapes")
    return tape


def _same_shape(op: str, a: Tensor, b: Tensor):
    if a.value.shape != b.value.shape:
        raise ShapeError(f"{op}: shapes {a.value.shape} and {b.value.shape} differ")


def _out(op: str, value: np.ndarray, tape, backs_builder) -> Tensor:
    out = Tensor(value, tape)
    if tape is not None:
        backs = backs_builder()
        if backs:
            tape._record(out._id, backs)
    return out


# ---------------------------------------------------------------- arithmetic

def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _same_shape("add", a, b)
    tape = _tape_of("add", a, b)

    def backs():
        bs = []
        if a._id is not None:
            bs.append((a._id, lambda g: g))
        if b._id is not None:
            bs.append((b._id, lambda g: g))
        return bs

    return _out("add", a.value + b.value, tape, backs)


def sub(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _same_shape("sub", a, b)
    tape = _tape_of("sub", a, b)

    def backs():
        bs = []
        if a._id is not None:
            bs.append((a._id, lambda g: g))
        if b._id is not None:
            bs.append((b._id, lambda g: -g))
        return bs

    return _out("sub", a.value - b.value, tape, backs)


def neg(a) -> Tensor:
    a = _wrap(a)

    def backs():
        return [(a._id, lambda g: -g)] if a._id is not None else []

    return _out("neg", -a.value, a.tape, backs)


def mul(a, b) -> Tensor:
    """Hadamard (componentwise) product of same-shape tensors."""
    a, b = _wrap(a), _wrap(b)
    _same_shape("mul", a, b)
    tape = _tape_of("mul", a, b)

    def backs():
        bs = []
        if a._id is not None:
            bs.append((a._id, lambda g, bv=b.value: g * bv))
        if b._id is not None:
            bs.append((b._id, lambda g, av=a.value: g * av))
        return bs

    return _out("mul", a.value * b.value, tape, backs)


def smul(a, c: float) -> Tensor:
    a = _wrap(a)
    c = float(c)

    def backs():
        return [(a._id, lambda g: g * c)] if a._id is not None else []

    return _out("smul", a.value * c, a.tape, backs)


def sadd(a, c: float) -> Tensor:
    a = _wrap(a)
    c = float(c)

    def backs():
        return [(a._id, lambda g: g)] if a._id is not None else []

    return _out("sadd", a.value + c, a.tape, backs)


def scale_rows(a, s) -> Tensor:
    """Multiply each row of ``a (M, n)`` by the per-row scalar ``s (M, 1)``."""
    a, s = _wrap(a), _wrap(s)
    if a.value.ndim != 2 or s.value.shape != (a.value.shape[0], 1):
        raise ShapeError(
            f"scale_rows: need (M, n) and (M, 1), got {a.value.shape} and {s.value.shape}"
        )
    tape = _tape_of("scale_rows", a, s)

    def backs():
        bs = []
        if a._id is not None:
            bs.append((a._id, lambda g, sv=s.value: g * sv))
        if s._id is not None:
            bs.append((s._id, lambda g, av=a.value: (g * av).sum(axis=1, keepdims=True)))
        return bs

    return _out("scale_rows", a.value * s.value, tape, backs)


def matmul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.value.shape[1] != b.value.shape[0]:
        raise ShapeError(f"matmul: shapes {a.value.shape} and {b.value.shape}")
    tape = _tape_of("matmul", a, b)

    def backs():
        bs = []
        if a._id is not None:
            bs.append((a._id, lambda g, bv=b.value: g @ bv.T))
        if b._id is not None:
            bs.append((b._id, lambda g, av=a.value: av.T @ g))
        return bs

    return _out("matmul", a.value @ b.value, tape, backs)


def affine(x, w, b) -> Tensor:
    """One dense layer: ``x (M, k) @ w.T + b`` with ``w (m, k)``, ``b (m,)``."""
    x, w, b = _wrap(x), _wrap(w), _wrap(b)
    if (
        x.value.ndim != 2
        or w.value.ndim != 2
        or x.value.shape[1] != w.value.shape[1]
        or b.value.shape != (w.value.shape[0],)
    ):
        raise ShapeError(
            f"affine: shapes x={x.value.shape} w={w.value.shape} b={b.value.shape}"
        )
    tape = _tape_of("affine", x, w, b)

    def backs():
        bs = []
        if x._id is not None:
            bs.append((x._id, lambda g, wv=w.value: g @ wv))
        if w._id is not None:
            bs.append((w._id, lambda g, xv=x.value: g.T @ xv))
        if b._id is not None:
            bs.append((b._id, lambda g: g.sum(axis=0)))
        return bs

    return _out("affine", x.value @ w.value.T + b.value, tape, backs)


# ------------------------------------------------------------ nonlinearities

def elu(a) -> Tensor:
    """Exponential linear unit with alpha = 1."""
    a = _wrap(a)
    av = a.value
    ex = np.exp(np.minimum(av, 0.0))  # exp clamped at 0 so positives cannot overflow
    val = np.where(av > 0.0, av, ex - 1.0)

    def backs():
        if a._id is None:
            return []
        return [(a._id, lambda g: g * np.where(av > 0.0, 1.0, ex))]

    return _out("elu", val, a.tape, backs)


def cos(a) -> Tensor:
    a = _wrap(a)

    def backs():
        if a._id is None:
            return []
        return [(a._id, lambda g, av=a.value: -g * np.sin(av))]

    return _out("cos", np.cos(a.value), a.tape, backs)


def sin(a) -> Tensor:
    a = _wrap(a)

    def backs():
        if a._id is None:
            return []
        return [(a._id, lambda g, av=a.value: g * np.cos(av))]

    return _out("sin", np.sin(a.value), a.tape, backs)


def tan(a) -> Tensor:
    a = _wrap(a)
    val = np.tan(a.value)

    def backs():
        if a._id is None:
            return []
        return [(a._id, lambda g: g * (1.0 + val * val))]

    return _out("tan", val, a.tape, backs)


def exp(a) -> Tensor:
    a = _wrap(a)
    val = np.exp(a.value)

    def backs():
        if a._id is None:
            return []
        return [(a._id, lambda g: g * val)]

    return _out("exp", val, a.tape, backs)


def log(a) -> Tensor:
    a = _wrap(a)
    if np.any(a.value <= 0.0):
        raise DomainError("log: input has non-positive entries")

    def backs():
        if a._id is None:
            return []
        return [(a._id, lambda g, av=a.value: g / av)]

    return _out("log", np.log(a.value), a.tape, backs)


def logsumexp(a) -> Tensor:
    """log(sum(exp(.))) with max-subtraction; rowwise on 2-D, full on 1-D."""
    a = _wrap(a)
    av = a.value
    if av.ndim == 2:
        m = av.max(axis=1, keepdims=True)
        s = np.exp(av - m)
        t = s.sum(axis=1, keepdims=True)
        val = (np.log(t) + m)[:, 0]
        soft = s / t

        def backs():
            if a._id is None:
                return []
            return [(a._id, lambda g: g[:, None] * soft)]

    elif av.ndim == 1:
        m = av.max()
        s = np.exp(av - m)
        t = s.sum()
        val = np.asarray(np.log(t) + m)
        soft = s / t

        def backs():
            if a._id is None:
                return []
            return [(a._id, lambda g: g * soft)]

    else:
        raise ShapeError(f"logsumexp: need 1-D or 2-D, got {av.shape}")
    return _out("logsumexp", val, a.tape, backs)


def softmax(a) -> Tensor:
    """Rowwise softmax on 2-D input, plain softmax on 1-D."""
    a = _wrap(a)
    av = a.value
    if av.ndim == 2:
        s = np.exp(av - av.max(axis=1, keepdims=True))
        val = s / s.sum(axis=1, keepdims=True)

        def backs():
            if a._id is None:
                return []

            def vjp(g):
                dot = (g * val).sum(axis=1, keepdims=True)
                return val * (g - dot)

            return [(a._id, vjp)]

    elif av.ndim == 1:
        s = np.exp(av - av.max())
        val = s / s.sum()

        def backs():
            if a._id is None:
                return []
            return [(a._id, lambda g: val * (g - (g * val).sum()))]

    else:
        raise ShapeError(f"softmax: need 1-D or 2-D, got {av.shape}")
    return _out("softmax", val, a.tape, backs)


# ----------------------------------------------------------------- reductions

def row_sum(a) -> Tensor:
    a = _wrap(a)
    if a.value.ndim != 2:
        raise ShapeError(f"row_sum: need 2-D, got {a.value.shape}")

    def backs():
        if a._id is None:
            return []
        return [(a._id, lambda g, sh=a.value.shape: np.broadcast_to(g[:, None], sh))]

    return _out("row_sum", a.value.sum(axis=1), a.tape, backs)


def row_sumsq(a) -> Tensor:
    """Squared Euclidean norm of each row: ``(M, n) -> (M,)``."""
    a = _wrap(a)
    if a.value.ndim != 2:
        raise ShapeError(f"row_sumsq: need 2-D, got {a.value.shape}")

    def backs():
        if a._id is None:
            return []
        return [(a._id, lambda g, av=a.value: 2.0 * g[:, None] * av)]

    return _out("row_sumsq", (a.value * a.value).sum(axis=1), a.tape, backs)


def inner(a, b) -> Tensor:
    """Inner product: rowwise for same-shape 2-D, scalar for 1-D."""
    a, b = _wrap(a), _wrap(b)
    _same_shape("inner", a, b)
    tape = _tape_of("inner", a, b)
    if a.value.ndim == 2:
        val = (a.value * b.value).sum(axis=1)

        def backs():
            bs = []
            if a._id is not None:
                bs.append((a._id, lambda g, bv=b.value: g[:, None] * bv))
            if b._id is not None:
                bs.append((b._id, lambda g, av=a.value: g[:, None] * av))
            return bs

    elif a.value.ndim == 1:
        val = np.asarray(a.value @ b.value)

        def backs():
            bs = []
            if a._id is not None:
                bs.append((a._id, lambda g, bv=b.value: g * bv))
            if b._id is not None:
                bs.append((b._id, lambda g, av=a.value: g * av))
            return bs

    else:
        raise ShapeError(f"inner: need 1-D or 2-D, got {a.value.shape}")
    return _out("inner", val, tape, backs)


def total_sum(a) -> Tensor:
    a = _wrap(a)

    def backs():
        if a._id is None:
            return []
        return [(a._id, lambda g, sh=a.value.shape: np.broadcast_to(g, sh))]

    return _out("total_sum", np.asarray(a.value.sum()), a.tape, backs)


def mean(a) -> Tensor:
    a = _wrap(a)
    n = a.value.size
    if n == 0:
        raise ShapeError("mean: empty tensor")

    def backs():
        if a._id is None:
            return []
        return [(a._id, lambda g, sh=a.value.shape: np.broadcast_to(g / n, sh))]

    return _out("mean", np.asarray(a.value.mean()), a.tape, backs)


def concat_cols(a, b) -> Tensor:
    """Column-concatenate two (M, .) blocks."""
    a, b = _wrap(a), _wrap(b)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.value.shape[0] != b.value.shape[0]:
        raise ShapeError(f"concat_cols: shapes {a.value.shape} and {b.value.shape}")
    tape = _tape_of("concat_cols", a, b)
    ka = a.value.shape[1]

    def backs():
        bs = []
        if a._id is not None:
            bs.append((a._id, lambda g: g[:, :ka]))
        if b._id is not None:
            bs.append((b._id, lambda g: g[:, ka:]))
        return bs

    return _out("concat_cols", np.concatenate([a.value, b.value], axis=1), tape, backs)
