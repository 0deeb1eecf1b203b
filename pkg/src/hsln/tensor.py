"""Dense tensors with reverse-mode automatic differentiation.

A :class:`Tensor` wraps a numpy array. Every operation applied to tensors
that require gradients records a node (its parents plus a closure that maps
the output gradient to input gradients). :func:`backward` walks the recorded
graph once in reverse topological order.

Parameters and activations are float32. :func:`reference_mode` switches the
default to float64 and exists for finite-difference gradient checks.

Broadcasting is deliberately narrow. Two operands must either have equal
shapes, or one must be a scalar, a trailing-suffix "bias" shape of the other
(``(d,)`` against ``(n, d)``), or have the same rank with singleton axes
(``(b, n, 1)`` against ``(b, n, d)``). Anything else is a
:class:`~hsln.errors.DimensionError`.
"""

import contextlib
import threading

import numpy as np

from .errors import ContractError, DimensionError, NumericalDomainError

_state = threading.local()


def default_dtype():
    return getattr(_state, "dtype", np.float32)


def _grad_enabled():
    return getattr(_state, "grad_enabled", True)


@contextlib.contextmanager
def reference_mode():
    """Create new tensors as float64 inside the block."""
    previous = default_dtype()
    _state.dtype = np.float64
    try:
        yield
    finally:
        _state.dtype = previous


@contextlib.contextmanager
def no_grad():
    """Do not record operations inside the block (inference)."""
    previous = _grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


class Tensor:
    """N-dimensional array participating in a gradient graph.

    Args:
        data: array-like; converted to ``dtype`` (default: :func:`default_dtype`).
        requires_grad: leaf tensors with this flag accumulate ``.grad``.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op", "name")
    __array_priority__ = 1000

    def __init__(self, data, requires_grad=False, dtype=None, name=None):
        dtype = dtype or default_dtype()
        self.data = np.asarray(data, dtype=dtype)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None
        self.op = "leaf"
        self.name = name

    # -- introspection -----------------------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    @property
    def is_leaf(self):
        return not self._parents

    def numpy(self):
        return self.data

    def item(self):
        return self.data.item()

    def detach(self):
        return Tensor(self.data, dtype=self.data.dtype)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, op={self.op}{flag})"

    def __len__(self):
        return self.data.shape[0]

    # -- operators ---------------------------------------------------------
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
        if isinstance(other, Tensor):
            raise TypeError("division by a Tensor is not supported; multiply by a constant")
        return mul(self, 1.0 / other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    @property
    def T(self):
        return transpose(self)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def tanh(self):
        return tanh(self)

    def sigmoid(self):
        return sigmoid(self)

    def exp(self):
        return exp(self)

    def log(self):
        return log(self)


def as_tensor(value, dtype=None):
    if isinstance(value, Tensor):
        return value
    if dtype is None and isinstance(value, np.ndarray) and value.dtype.kind == "f":
        dtype = value.dtype
    return Tensor(value, dtype=dtype)


def _make(data, parents, backward, op):
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.name = None
    out.op = op
    if _grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    else:
        out.requires_grad = False
        out._parents = ()
        out._backward = None
    return out


# -- broadcasting ------------------------------------------------------------

def _check_broadcast(a, b, op):
    if a == b or a == () or b == ():
        return
    if len(b) < len(a) and a[len(a) - len(b):] == b:
        return
    if len(a) < len(b) and b[len(b) - len(a):] == a:
        return
    if len(a) == len(b) and all(x == y or x == 1 or y == 1 for x, y in zip(a, b)):
        return
    raise DimensionError(f"{op}: cannot combine shapes {a} and {b}")


def _unbroadcast(grad, shape):
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _operands(a, b):
    if not isinstance(a, Tensor):
        a = Tensor(a, dtype=b.data.dtype if isinstance(b, Tensor) else None)
    if not isinstance(b, Tensor):
        b = Tensor(b, dtype=a.data.dtype)
    return a, b


# -- elementwise -------------------------------------------------------------

def add(a, b):
    a, b = _operands(a, b)
    _check_broadcast(a.shape, b.shape, "add")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _make(a.data + b.data, (a, b), backward, "add")


def sub(a, b):
    a, b = _operands(a, b)
    _check_broadcast(a.shape, b.shape, "sub")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _make(a.data - b.data, (a, b), backward, "sub")


def mul(a, b):
    a, b = _operands(a, b)
    _check_broadcast(a.shape, b.shape, "mul")

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _make(a.data * b.data, (a, b), backward, "mul")


def tanh(x):
    y = np.tanh(x.data)

    def backward(g):
        return (g * (1.0 - y * y),)

    return _make(y, (x,), backward, "tanh")


def sigmoid(x):
    # split by sign so exp never overflows
    d = x.data
    z = np.exp(-np.abs(d))
    y = np.where(d >= 0, 1.0 / (1.0 + z), z / (1.0 + z)).astype(d.dtype, copy=False)

    def backward(g):
        return (g * y * (1.0 - y),)

    return _make(y, (x,), backward, "sigmoid")


def exp(x):
    with np.errstate(over="raise"):
        try:
            y = np.exp(x.data)
        except FloatingPointError:
            raise NumericalDomainError(
                f"exp overflow (max input {float(np.max(x.data)):.4g})") from None

    def backward(g):
        return (g * y,)

    return _make(y, (x,), backward, "exp")


def log(x):
    if np.any(x.data <= 0) or np.any(np.isnan(x.data)):
        raise NumericalDomainError("log of a non-positive value")
    y = np.log(x.data)

    def backward(g):
        return (g / x.data,)

    return _make(y, (x,), backward, "log")


def square(x):
    return mul(x, x)


# -- linear algebra ----------------------------------------------------------

def matmul(a, b):
    """Matrix product ``a @ b``.

    Supports ``(m, k) @ (k, n)``, a batch of matrices against one matrix
    ``(..., m, k) @ (k, n)``, and equal-batch products ``(B, m, k) @ (B, k, n)``.
    """
    a, b = _operands(a, b)
    sa, sb = a.shape, b.shape
    ok = (len(sa) >= 2 and len(sb) >= 2 and sa[-1] == sb[-2]
          and (len(sb) == 2 or sa[:-2] == sb[:-2]))
    if not ok:
        raise DimensionError(f"matmul: shapes {sa} and {sb} are not aligned")

    def backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        if len(sb) == 2 and gb.ndim > 2:
            gb = gb.reshape(-1, *gb.shape[-2:]).sum(axis=0)
        return ga, gb

    return _make(np.matmul(a.data, b.data), (a, b), backward, "matmul")


def transpose(x, axes=None):
    if axes is None:
        axes = tuple(reversed(range(x.ndim)))
    inverse = tuple(np.argsort(axes))

    def backward(g):
        return (np.transpose(g, inverse),)

    return _make(np.transpose(x.data, axes), (x,), backward, "transpose")


def reshape(x, shape):
    original = x.shape

    def backward(g):
        return (g.reshape(original),)

    try:
        y = x.data.reshape(shape)
    except ValueError as exc:
        raise DimensionError(f"reshape: {original} -> {shape}: {exc}") from None
    return _make(y, (x,), backward, "reshape")


# -- reductions --------------------------------------------------------------

def _restore(g, shape, axis, keepdims):
    if axis is None:
        return np.broadcast_to(g, shape)
    if not keepdims:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g, shape)


def tsum(x, axis=None, keepdims=False):
    def backward(g):
        return (np.array(_restore(g, x.shape, axis, keepdims)),)

    return _make(np.asarray(x.data.sum(axis=axis, keepdims=keepdims)), (x,), backward, "sum")


def mean(x, axis=None, keepdims=False):
    if axis is None:
        count = x.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = int(np.prod([x.shape[i] for i in axes]))
    return mul(tsum(x, axis, keepdims), 1.0 / count)


def tmax(x, axis):
    """Maximum along one axis; the gradient goes to the first maximal entry."""
    idx = np.expand_dims(np.argmax(x.data, axis=axis), axis)
    y = np.take_along_axis(x.data, idx, axis=axis)

    def backward(g):
        out = np.zeros_like(x.data)
        np.put_along_axis(out, idx, np.expand_dims(g, axis), axis=axis)
        return (out,)

    return _make(np.squeeze(y, axis=axis), (x,), backward, "max")


def logsumexp(x, axis):
    d = x.data
    m = np.max(d, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0).astype(d.dtype, copy=False)
    e = np.exp(d - m)
    s = e.sum(axis=axis, keepdims=True)
    y = np.log(s) + m
    p = e / s

    def backward(g):
        return (np.expand_dims(g, axis) * p,)

    return _make(np.squeeze(y, axis=axis), (x,), backward, "logsumexp")


def softmax(x, axis=-1):
    """Softmax along ``axis``, stabilised by subtracting the slice maximum."""
    if not -x.ndim <= axis < x.ndim:
        raise DimensionError(f"softmax: axis {axis} invalid for shape {x.shape}")
    d = x.data
    e = np.exp(d - np.max(d, axis=axis, keepdims=True))
    y = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return _make(y, (x,), backward, "softmax")


def log_softmax(x, axis=-1):
    d = x.data
    m = np.max(d, axis=axis, keepdims=True)
    lse = np.log(np.exp(d - m).sum(axis=axis, keepdims=True)) + m
    y = d - lse
    p = np.exp(y)

    def backward(g):
        return (g - p * g.sum(axis=axis, keepdims=True),)

    return _make(y, (x,), backward, "log_softmax")


# -- structural --------------------------------------------------------------

def _is_advanced(index):
    items = index if isinstance(index, tuple) else (index,)
    return any(isinstance(i, (list, np.ndarray)) for i in items)


def getitem(x, index):
    if isinstance(index, Tensor):
        raise TypeError("index with numpy arrays, not Tensors")
    advanced = _is_advanced(index)

    def backward(g):
        out = np.zeros_like(x.data)
        if advanced:
            np.add.at(out, index, g)
        else:
            out[index] += g
        return (out,)

    return _make(np.array(x.data[index]), (x,), backward, "getitem")


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    try:
        y = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        shapes = [t.shape for t in tensors]
        raise DimensionError(f"concat: shapes {shapes}: {exc}") from None
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _make(y, tuple(tensors), backward, "concat")


def stack(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    try:
        y = np.stack([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        shapes = [t.shape for t in tensors]
        raise DimensionError(f"stack: shapes {shapes}: {exc}") from None

    def backward(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return _make(y, tuple(tensors), backward, "stack")


def masked_fill(x, mask, value):
    """Replace entries where the boolean ``mask`` is true by a constant."""
    mask = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
    y = np.where(mask, np.asarray(value, dtype=x.dtype), x.data)

    def backward(g):
        return (np.where(mask, 0.0, g).astype(g.dtype, copy=False),)

    return _make(y, (x,), backward, "masked_fill")


# -- graph -------------------------------------------------------------------

def topological_order(root):
    """Nodes reachable from ``root`` (inputs before outputs), each exactly once."""
    order, seen = [], set()
    stack_ = [(root, False)]
    while stack_:
        node, expanded = stack_.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack_.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack_.append((parent, False))
    return order


def backward(loss):
    """Populate ``.grad`` of every gradient-requiring leaf reachable from ``loss``.

    Leaf gradients accumulate across calls; the caller zeroes them between
    optimizer steps.
    """
    if loss.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ContractError("loss is not connected to any tensor requiring gradients")
    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(topological_order(loss)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.is_leaf:
            node.grad = g.copy() if node.grad is None else node.grad + g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if not parent.requires_grad:
                continue
            pg = np.asarray(pg, dtype=parent.data.dtype)
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg
