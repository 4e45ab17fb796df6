"""Dense real tensors on numpy plus a reverse-mode differentiation tape.

Forward ops compute with numpy; while a ``Tape`` is active, every op whose
output needs gradients appends a record ``(inputs, output, backward)``.
Replaying the records in reverse creation order is backpropagation: creation
order is a topological order, so every consumer of a value is visited before
its producer.

Default precision is float64; float32 is accepted for training speed.
Broadcasting follows numpy's trailing-dimension alignment.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ContractError, DimensionError, DomainError

__all__ = [
    "Tensor",
    "Tape",
    "GradCheckReport",
    "matmul",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "cos",
    "sin",
    "sqrt",
    "atan2",
    "gelu",
    "absolute",
    "reduce_sum",
    "reduce_mean",
    "reshape",
    "transpose",
    "pad_zeros",
    "slice_window",
    "softmax_cross_entropy",
    "grad_check",
]

_FLOAT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))
_uids = itertools.count(1)
_TAPE_STACK: list["Tape"] = []


class Tensor:
    """Dense float array with autodiff bookkeeping.

    ``data`` is a numpy array (float32 or float64). ``requires_grad=True``
    marks a leaf whose ``.grad`` is populated by ``Tape.backward``. Tensors
    produced by ops inherit ``requires_grad`` from their inputs.
    """

    __slots__ = ("data", "requires_grad", "grad", "uid")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in _FLOAT_DTYPES:
            arr = arr.astype(np.float64)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self.uid = next(_uids)

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={tuple(self.shape)}, dtype={self.dtype.name}{flag})"

    # Operator sugar; everything routes through the taped ops below.
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __abs__(self):
        return absolute(self)

    def __matmul__(self, other):
        return matmul(self, other)


class Tape:
    """Ordered op record; replaying it backwards is backpropagation.

    Use as a context manager::

        with Tape() as tape:
            loss = f(x)
        tape.backward(loss)     # fills x.grad

    ``backward`` seeds the scalar loss with gradient 1, walks the records in
    reverse, accumulates gradients keyed by tensor uid, and finally assigns
    ``.grad`` exactly once on every requires_grad leaf that appeared on the
    tape. Leaves that do not influence the loss receive a zero gradient.
    ``.grad`` is overwritten, never accumulated, across backward calls.

    Backward closures hold references to input arrays, not copies: call
    ``backward`` before mutating any participating ``.data`` in place (the
    optimizer and grad_check both respect this ordering).
    """

    def __init__(self):
        self._records: list[tuple[tuple[Tensor, ...], Tensor, Callable]] = []

    def __enter__(self) -> "Tape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _TAPE_STACK.pop()
        return False

    def __len__(self) -> int:
        return len(self._records)

    def record(self, inputs: Sequence[Tensor], output: Tensor, backward: Callable):
        self._records.append((tuple(inputs), output, backward))

    def backward(self, loss: Tensor) -> None:
        if not isinstance(loss, Tensor):
            raise ContractError("backward target must be a Tensor")
        if loss.size != 1:
            raise ContractError(
                f"backward target must be scalar, got shape {tuple(loss.shape)}"
            )
        produced = {out.uid for _, out, _ in self._records}
        grads: dict[int, np.ndarray] = {loss.uid: np.ones_like(loss.data)}
        for inputs, output, backfn in reversed(self._records):
            gout = grads.pop(output.uid, None)
            if gout is None:
                continue  # not on a path to the loss
            gins = backfn(gout)
            for inp, gin in zip(inputs, gins):
                if gin is None or not inp.requires_grad:
                    continue
                have = grads.get(inp.uid)
                grads[inp.uid] = gin if have is None else have + gin
        # Only leaves (never an op output) remain keyed; assign once each.
        assigned: set[int] = set()
        for inputs, _out, _ in self._records:
            for t in inputs:
                if t.requires_grad and t.uid not in produced and t.uid not in assigned:
                    g = grads.get(t.uid)
                    t.grad = np.zeros_like(t.data) if g is None else g
                    assigned.add(t.uid)
        if loss.requires_grad and loss.uid not in produced and loss.uid not in assigned:
            loss.grad = grads[loss.uid]


def _as_tensor(x, like: Tensor | None = None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    dtype = like.dtype if like is not None else None
    return Tensor(np.asarray(x, dtype=dtype))


def _record(inputs: Sequence[Tensor], output: Tensor, backward: Callable) -> None:
    if _TAPE_STACK and output.requires_grad:
        _TAPE_STACK[-1].record(inputs, output, backward)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _broadcast_check(a: Tensor, b: Tensor, opname: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(
            f"{opname}: shapes {tuple(a.shape)} and {tuple(b.shape)} do not broadcast"
        ) from None


# ---------------------------------------------------------------------------
# binary elementwise ops


def add(a, b) -> Tensor:
    a = _as_tensor(a, like=b if isinstance(b, Tensor) else None)
    b = _as_tensor(b, like=a)
    _broadcast_check(a, b, "add")
    out = Tensor(a.data + b.data, a.requires_grad or b.requires_grad)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    _record((a, b), out, backward)
    return out


def sub(a, b) -> Tensor:
    a = _as_tensor(a, like=b if isinstance(b, Tensor) else None)
    b = _as_tensor(b, like=a)
    _broadcast_check(a, b, "sub")
    out = Tensor(a.data - b.data, a.requires_grad or b.requires_grad)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    _record((a, b), out, backward)
    return out


def mul(a, b) -> Tensor:
    a = _as_tensor(a, like=b if isinstance(b, Tensor) else None)
    b = _as_tensor(b, like=a)
    _broadcast_check(a, b, "mul")
    out = Tensor(a.data * b.data, a.requires_grad or b.requires_grad)

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    _record((a, b), out, backward)
    return out


def div(a, b) -> Tensor:
    a = _as_tensor(a, like=b if isinstance(b, Tensor) else None)
    b = _as_tensor(b, like=a)
    _broadcast_check(a, b, "div")
    out = Tensor(a.data / b.data, a.requires_grad or b.requires_grad)

    def backward(g):
        ga = _unbroadcast(g / b.data, a.shape)
        gb = _unbroadcast(-g * a.data / (b.data * b.data), b.shape)
        return ga, gb

    _record((a, b), out, backward)
    return out


def atan2(y, x) -> Tensor:
    """Angle of the point (x, y); gradient defined as (0, 0) at the origin."""
    y = _as_tensor(y, like=x if isinstance(x, Tensor) else None)
    x = _as_tensor(x, like=y)
    _broadcast_check(y, x, "atan2")
    out = Tensor(np.arctan2(y.data, x.data), y.requires_grad or x.requires_grad)

    def backward(g):
        denom = x.data * x.data + y.data * y.data
        safe = np.where(denom == 0.0, 1.0, denom)
        gy = np.where(denom == 0.0, 0.0, g * x.data / safe)
        gx = np.where(denom == 0.0, 0.0, -g * y.data / safe)
        return _unbroadcast(gy, y.shape), _unbroadcast(gx, x.shape)

    _record((y, x), out, backward)
    return out


# ---------------------------------------------------------------------------
# unary elementwise ops


def neg(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(-a.data, a.requires_grad)
    _record((a,), out, lambda g: (-g,))
    return out


def cos(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.cos(a.data), a.requires_grad)
    _record((a,), out, lambda g: (-g * np.sin(a.data),))
    return out


def sin(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.sin(a.data), a.requires_grad)
    _record((a,), out, lambda g: (g * np.cos(a.data),))
    return out


def sqrt(a) -> Tensor:
    a = _as_tensor(a)
    if np.any(a.data < 0):
        raise DomainError("sqrt of negative value")
    root = np.sqrt(a.data)
    out = Tensor(root, a.requires_grad)
    _record((a,), out, lambda g: (g * 0.5 / root,))
    return out


def absolute(a) -> Tensor:
    """|a| elementwise; the subgradient at 0 is fixed to 0."""
    a = _as_tensor(a)
    out = Tensor(np.abs(a.data), a.requires_grad)
    _record((a,), out, lambda g: (g * np.sign(a.data),))
    return out


_GELU_A = 0.044715
_GELU_C = math.sqrt(2.0 / math.pi)


def gelu(a) -> Tensor:
    """GELU, tanh form: 0.5*x*(1 + tanh(sqrt(2/pi)*(x + 0.044715*x^3)))."""
    a = _as_tensor(a)
    x = a.data
    inner = _GELU_C * (x + _GELU_A * x * x * x)
    t = np.tanh(inner)
    out = Tensor(0.5 * x * (1.0 + t), a.requires_grad)

    def backward(g):
        dinner = _GELU_C * (1.0 + 3.0 * _GELU_A * x * x)
        return (g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner),)

    _record((a,), out, backward)
    return out


# ---------------------------------------------------------------------------
# matmul


def matmul(a, b) -> Tensor:
    """Strict 2-D matrix product. Gradients: dA = g @ B.T, dB = A.T @ g."""
    a = _as_tensor(a, like=b if isinstance(b, Tensor) else None)
    b = _as_tensor(b, like=a)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(
            f"matmul expects 2-D operands, got {tuple(a.shape)} and {tuple(b.shape)}"
        )
    if a.shape[1] != b.shape[0]:
        raise DimensionError(
            f"matmul inner dimensions differ: {tuple(a.shape)} vs {tuple(b.shape)}"
        )
    out = Tensor(a.data @ b.data, a.requires_grad or b.requires_grad)

    def backward(g):
        return g @ b.data.T, a.data.T @ g

    _record((a, b), out, backward)
    return out


# ---------------------------------------------------------------------------
# shape ops


def _norm_axes(axis, ndim: int, opname: str) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    out = []
    for ax in axes:
        if not -ndim <= ax < ndim:
            raise DimensionError(f"{opname}: axis {ax} out of range for ndim {ndim}")
        out.append(ax % ndim)
    if len(set(out)) != len(out):
        raise DimensionError(f"{opname}: repeated axis in {axes}")
    return tuple(sorted(out))


def reduce_sum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    axes = _norm_axes(axis, a.ndim, "reduce_sum")
    out = Tensor(a.data.sum(axis=axes, keepdims=keepdims), a.requires_grad)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape),)

    _record((a,), out, backward)
    return out


def reduce_mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    axes = _norm_axes(axis, a.ndim, "reduce_mean")
    count = 1
    for ax in axes:
        count *= a.shape[ax]
    out = Tensor(a.data.mean(axis=axes, keepdims=keepdims), a.requires_grad)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g / count, a.shape),)

    _record((a,), out, backward)
    return out


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    shape = tuple(int(s) for s in shape)
    try:
        data = a.data.reshape(shape)
    except ValueError:
        raise DimensionError(
            f"cannot reshape {tuple(a.shape)} (size {a.size}) to {shape}"
        ) from None
    out = Tensor(data, a.requires_grad)
    _record((a,), out, lambda g: (g.reshape(a.shape),))
    return out


def transpose(a, axes=None) -> Tensor:
    a = _as_tensor(a)
    if axes is None:
        perm = tuple(range(a.ndim))[::-1]
    else:
        perm = tuple(int(ax) for ax in axes)
        if sorted(perm) != list(range(a.ndim)):
            raise DimensionError(f"transpose: {axes} is not a permutation of axes")
    inv = tuple(np.argsort(perm))
    out = Tensor(a.data.transpose(perm), a.requires_grad)
    _record((a,), out, lambda g: (g.transpose(inv),))
    return out


def pad_zeros(a, axis: int, before: int, after: int) -> Tensor:
    """Insert exact zeros before/after along one axis."""
    a = _as_tensor(a)
    (ax,) = _norm_axes(axis, a.ndim, "pad_zeros")
    if before < 0 or after < 0:
        raise DimensionError(f"pad_zeros: negative pad ({before}, {after})")
    widths = [(0, 0)] * a.ndim
    widths[ax] = (before, after)
    out = Tensor(np.pad(a.data, widths), a.requires_grad)

    def backward(g):
        sl = [slice(None)] * a.ndim
        sl[ax] = slice(before, before + a.shape[ax])
        return (g[tuple(sl)],)

    _record((a,), out, backward)
    return out


def slice_window(a, axis: int, start: int, length: int) -> Tensor:
    """Contiguous window of ``length`` elements along ``axis`` from ``start``."""
    a = _as_tensor(a)
    (ax,) = _norm_axes(axis, a.ndim, "slice_window")
    if length < 1 or start < 0 or start + length > a.shape[ax]:
        raise DimensionError(
            f"slice_window: [{start}, {start + length}) outside axis extent {a.shape[ax]}"
        )
    sl = [slice(None)] * a.ndim
    sl[ax] = slice(start, start + length)
    out = Tensor(a.data[tuple(sl)], a.requires_grad)

    def backward(g):
        gx = np.zeros_like(a.data)
        gx[tuple(sl)] = g
        return (gx,)

    _record((a,), out, backward)
    return out


# ---------------------------------------------------------------------------
# loss


def softmax_cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean cross-entropy of integer labels against row-wise softmax.

    Fused op: backward is (softmax - onehot) / batch, which keeps the tape
    short and is exact (verified against finite differences in the tests).
    """
    logits = _as_tensor(logits)
    labels = np.asarray(labels)
    if logits.ndim != 2:
        raise DimensionError(f"logits must be 2-D, got {tuple(logits.shape)}")
    n, c = logits.shape
    if labels.shape != (n,):
        raise DimensionError(f"labels shape {labels.shape} != ({n},)")
    if labels.min() < 0 or labels.max() >= c:
        raise ContractError("labels out of class range")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    ez = np.exp(z)
    sez = ez.sum(axis=1, keepdims=True)
    logp = z - np.log(sez)
    out = Tensor(-logp[np.arange(n), labels].mean(), logits.requires_grad)

    def backward(g):
        grad = ez / sez
        grad[np.arange(n), labels] -= 1.0
        return (g * grad / n,)

    _record((logits,), out, backward)
    return out


# ---------------------------------------------------------------------------
# gradient checking


@dataclass
class GradCheckReport:
    """Outcome of a finite-difference check of the tape gradients."""

    max_rel_err: float
    tol: float
    passed: bool
    per_input: tuple[float, ...]

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return f"grad_check {status}: max_rel_err={self.max_rel_err:.3e} tol={self.tol:.1e}"


def grad_check(f, x, step: float = 1e-5, tol: float = 1e-4) -> GradCheckReport:
    """Compare tape gradients of a scalar-valued ``f`` with central differences.

    ``x`` may be one Tensor or a sequence of Tensors; in the sequence case
    ``f`` receives the list. Perturbations for the finite-difference
    evaluations are made in place on ``t.data``, so ``f`` may close over the
    tensors and ignore its argument. The relative error per element is
    ``|analytic - numeric| / max(1, |numeric|)`` (inputs are assumed O(1)).
    """
    if step <= 0:
        raise ContractError("grad_check: step must be positive")
    single = isinstance(x, Tensor)
    xs = [x] if single else list(x)
    for t in xs:
        t.requires_grad = True

    def evaluate() -> float:
        y = f(xs[0]) if single else f(xs)
        if not isinstance(y, Tensor) or y.size != 1:
            raise ContractError("grad_check: f must return a scalar Tensor")
        return float(y.data)

    with Tape() as tape:
        y = f(xs[0]) if single else f(xs)
    if not isinstance(y, Tensor) or y.size != 1:
        raise ContractError("grad_check: f must return a scalar Tensor")
    tape.backward(y)
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad for t in xs]

    per_input = []
    for t, ga in zip(xs, analytic):
        max_err = 0.0
        for idx in np.ndindex(*t.data.shape):
            orig = t.data[idx]
            t.data[idx] = orig + step
            fp = evaluate()
            t.data[idx] = orig - step
            fm = evaluate()
            t.data[idx] = orig
            numeric = (fp - fm) / (2.0 * step)
            err = abs(float(ga[idx]) - numeric) / max(1.0, abs(numeric))
            if err > max_err:
                max_err = err
        per_input.append(max_err)
    worst = max(per_input) if per_input else 0.0
    return GradCheckReport(worst, tol, worst <= tol, tuple(per_input))
