"""Dense float64 tensors with tape-style reverse-mode differentiation.

Every operation on a :class:`Tensor` that depends on a differentiable input
records a node holding its parents and a vector-Jacobian product.  The
computation graph is implicit: it is rebuilt by every forward pass and
discarded with the loss that owns it, so there is nothing to reset between
optimizer steps beyond the leaf gradients (see :func:`zero_grad`).

Node ids grow monotonically, which makes creation order a valid topological
order; :func:`backward` walks the ancestors of the loss in reverse id order
and visits each node exactly once.
"""
from __future__ import annotations

import itertools
from typing import Callable, Iterable, Sequence

import numpy as np

_ids = itertools.count()

ELEMENTWISE_OPS = ("sigmoid", "tanh", "exp", "log", "relu")


class Tensor:
    """An n-dimensional float64 array participating in an autodiff graph."""

    __array_priority__ = 100

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_vjp", "_id")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.array(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._vjp: Callable | None = None
        self._id = next(_ids)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._vjp is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else self.data.item()

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    def __len__(self) -> int:
        return len(self.data)

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise TypeError("division is only supported by constants")
        return mul(self, 1.0 / np.asarray(other, dtype=np.float64))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis=None):
        return sum_(self, axis)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        return transpose(self, axes or None)

    @property
    def T(self):
        return transpose(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(data, name: str | None = None) -> Tensor:
    """A leaf tensor whose gradient is accumulated by :func:`backward`."""
    return Tensor(data, requires_grad=True, name=name)


def apply_op(data: np.ndarray, parents: Sequence[Tensor], vjp: Callable) -> Tensor:
    """Wrap a forward result as a graph node.

    ``vjp(grad_out)`` must return one gradient (or ``None``) per parent, each
    shaped like that parent.  When no parent needs a gradient the result is a
    plain constant and nothing is recorded.
    """
    out = Tensor.__new__(Tensor)
    out.data = data if data.dtype == np.float64 else data.astype(np.float64)
    out.grad = None
    out.name = None
    out._id = next(_ids)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._vjp = vjp
    else:
        out.requires_grad = False
        out._parents = ()
        out._vjp = None
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# arithmetic


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return apply_op(a.data + b.data, (a, b), vjp)


def neg(a: Tensor) -> Tensor:
    return apply_op(-a.data, (a,), lambda g: (-g,))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def vjp(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return apply_op(a.data * b.data, (a, b), vjp)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of 2-D operands; a 1-D operand acts as a row/column vector."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim not in (1, 2) or b.ndim not in (1, 2) or a.shape[-1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    A, B = a.data, b.data

    def vjp(g):
        if A.ndim == 1 and B.ndim == 1:
            return g * B, g * A
        if A.ndim == 1:
            return B @ g, np.outer(A, g)
        if B.ndim == 1:
            return np.outer(g, B), A.T @ g
        return g @ B.T, A.T @ g

    return apply_op(A @ B, (a, b), vjp)


def dot(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"dot needs equal-length vectors, got {a.shape} and {b.shape}")
    return matmul(a, b)


# ---------------------------------------------------------------------------
# elementwise nonlinearities


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # exp of a non-positive argument only: no overflow warnings on large |x|
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(x: Tensor) -> Tensor:
    y = _sigmoid(x.data)
    return apply_op(y, (x,), lambda g: (g * y * (1.0 - y),))


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return apply_op(y, (x,), lambda g: (g * (1.0 - y * y),))


def exp(x: Tensor) -> Tensor:
    y = np.exp(x.data)
    return apply_op(y, (x,), lambda g: (g * y,))


def log(x: Tensor) -> Tensor:
    if np.any(x.data <= 0):
        raise ValueError("log domain error: input has non-positive entries")
    xd = x.data
    return apply_op(np.log(xd), (x,), lambda g: (g / xd,))


def relu(x: Tensor) -> Tensor:
    # derivative 0 at the kink
    active = x.data > 0
    return apply_op(np.where(active, x.data, 0.0), (x,), lambda g: (g * active,))


_ELEMENTWISE = {"sigmoid": sigmoid, "tanh": tanh, "exp": exp, "log": log, "relu": relu}


def elementwise(op: str, x: Tensor) -> Tensor:
    try:
        fn = _ELEMENTWISE[op]
    except KeyError:
        raise ValueError(f"unknown elementwise op {op!r}; expected one of {ELEMENTWISE_OPS}") from None
    return fn(x)


# ---------------------------------------------------------------------------
# reductions


def _check_axis(x: Tensor, axis: int) -> int:
    if not -x.ndim <= axis < x.ndim:
        raise ValueError(f"axis {axis} out of bounds for shape {x.shape}")
    return axis % x.ndim


def sum_(x: Tensor, axis: int | None = None) -> Tensor:
    if axis is None:
        shape = x.shape
        return apply_op(np.asarray(x.data.sum()), (x,), lambda g: (np.broadcast_to(g, shape).copy(),))
    axis = _check_axis(x, axis)

    def vjp(g):
        return (np.broadcast_to(np.expand_dims(g, axis), x.shape).copy(),)

    return apply_op(x.data.sum(axis=axis), (x,), vjp)


def max_(x: Tensor, axis: int) -> Tensor:
    """Max over ``axis``; the gradient goes to the first maximal entry."""
    axis = _check_axis(x, axis)
    idx = np.expand_dims(np.argmax(x.data, axis=axis), axis)
    out = np.take_along_axis(x.data, idx, axis=axis).squeeze(axis)

    def vjp(g):
        full = np.zeros_like(x.data)
        np.put_along_axis(full, idx, np.expand_dims(g, axis), axis=axis)
        return (full,)

    return apply_op(out, (x,), vjp)


def logsumexp(x: Tensor, axis: int = -1) -> Tensor:
    """Max-shifted log-sum-exp reducing ``axis``."""
    axis = _check_axis(x, axis)
    m = np.max(x.data, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    e = np.exp(x.data - m)
    s = e.sum(axis=axis, keepdims=True)
    out = (np.log(s) + m).squeeze(axis)

    def vjp(g):
        return (np.expand_dims(g, axis) * (e / s),)

    return apply_op(out, (x,), vjp)


# ---------------------------------------------------------------------------
# shape manipulation


def reshape(x: Tensor, shape) -> Tensor:
    shape_in = x.shape
    return apply_op(x.data.reshape(shape), (x,), lambda g: (g.reshape(shape_in),))


def transpose(x: Tensor, axes=None) -> Tensor:
    inv = None if axes is None else tuple(np.argsort(axes))
    return apply_op(np.transpose(x.data, axes), (x,), lambda g: (np.transpose(g, inv),))


def _has_advanced_index(index) -> bool:
    parts = index if isinstance(index, tuple) else (index,)
    return any(isinstance(p, (list, np.ndarray)) for p in parts)


def getitem(x: Tensor, index) -> Tensor:
    advanced = _has_advanced_index(index)

    def vjp(g):
        full = np.zeros_like(x.data)
        if advanced:
            np.add.at(full, index, g)
        else:
            full[index] += g
        return (full,)

    return apply_op(np.asarray(x.data[index]), (x,), vjp)


def take_rows(table: Tensor, ids) -> Tensor:
    """Rows of ``table`` selected by an integer array of any shape (embedding lookup)."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise IndexError(f"row index out of range for table with {table.shape[0]} rows")
    return getitem(table, ids)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def vjp(g):
        return tuple(np.split(g, bounds, axis=axis))

    return apply_op(data, tensors, vjp)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    data = np.stack([t.data for t in tensors], axis=axis)

    def vjp(g):
        return tuple(np.moveaxis(g, axis, 0))

    return apply_op(data, tensors, vjp)


# ---------------------------------------------------------------------------
# backward pass


def _topological(loss: Tensor) -> list[Tensor]:
    seen: set[int] = set()
    nodes: list[Tensor] = []
    stack_ = [loss]
    while stack_:
        node = stack_.pop()
        if node._id in seen:
            continue
        seen.add(node._id)
        nodes.append(node)
        stack_.extend(p for p in node._parents if p.requires_grad and p._id not in seen)
    nodes.sort(key=lambda t: t._id)
    return nodes


def backward(loss: Tensor) -> dict[Tensor, np.ndarray]:
    """Accumulate d(loss)/d(leaf) into every reachable leaf's ``grad``.

    Returns a map from each reached leaf to its accumulated gradient.  Calling
    twice without :func:`zero_grad` adds the gradients up.
    """
    if loss.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.shape}")
    result: dict[Tensor, np.ndarray] = {}
    if not loss.requires_grad:
        return result
    pending = {loss._id: np.ones_like(loss.data)}
    for node in reversed(_topological(loss)):
        g = pending.pop(node._id, None)
        if g is None:
            continue
        if node._vjp is None:
            node.grad = g.copy() if node.grad is None else node.grad + g
            result[node] = node.grad
            continue
        for parent, pg in zip(node._parents, node._vjp(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = parent._id
            pending[key] = pending[key] + pg if key in pending else pg
    return result


def zero_grad(params: Iterable[Tensor]) -> None:
    for p in params:
        p.grad = None


def finite_diff_check(
    fn: Callable[..., Tensor],
    inputs: Sequence[Tensor],
    epsilon: float = 1e-4,
    floor: float = 1e-8,
) -> float:
    """Worst relative error between autodiff and central-difference gradients.

    ``fn(*inputs)`` must return a scalar tensor.  Every element of every input
    that requires a gradient is perturbed by +/- ``epsilon``.  The relative
    error uses ``max(|analytic|, |numeric|, floor)`` as denominator.  A NaN
    anywhere is reported as ``inf``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    targets = [t for t in inputs if t.requires_grad]
    saved = [t.grad for t in targets]
    zero_grad(targets)
    out = fn(*inputs)
    if not np.all(np.isfinite(out.data)):
        return float("inf")
    backward(out)
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in targets]
    for t, g in zip(targets, saved):
        t.grad = g

    worst = 0.0
    for t, a in zip(targets, analytic):
        flat = t.data.flat
        af = a.reshape(-1)
        for j in range(t.size):
            orig = flat[j]
            flat[j] = orig + epsilon
            up = fn(*inputs).item()
            flat[j] = orig - epsilon
            down = fn(*inputs).item()
            flat[j] = orig
            num = (up - down) / (2.0 * epsilon)
            if not np.isfinite(num):
                return float("inf")
            err = abs(af[j] - num) / max(abs(af[j]), abs(num), floor)
            worst = max(worst, err)
    return worst
