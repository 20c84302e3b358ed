"""Dense tensors with reverse-mode differentiation.

A `Tensor` wraps a row-major numpy array (float32 or float64). Ops executed
while a `GradTape` is active are recorded on it; `GradTape.grad` walks the
records in reverse to produce parameter gradients. With no active tape every
op is plain forward numpy, which is how frozen/eval paths run.

Tensors are treated as immutable once created; nothing here writes to an
input array.
"""

import threading

import numpy as np
from scipy.special import expit

from ..errors import NumericsError
from . import backend

DTYPES = {"float32": np.float32, "float64": np.float64}


class Tensor:
    """Immutable dense array value, optionally tracked for gradients."""

    __slots__ = ("data", "requires_grad")

    def __init__(self, data, dtype=None, requires_grad=False):
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype, copy=False)
        elif arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        self.data = arr
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data.reshape(()))

    def numpy(self):
        return self.data

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype})"

    # operator sugar; constants are wrapped untracked
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

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def assert_finite(x, what="tensor"):
    arr = x.data if isinstance(x, Tensor) else np.asarray(x)
    if not np.all(np.isfinite(arr)):
        raise NumericsError(f"non-finite values in {what}")


_tls = threading.local()


def _tape_stack():
    stack = getattr(_tls, "tapes", None)
    if stack is None:
        stack = []
        _tls.tapes = stack
    return stack


class GradTape:
    """Single-threaded recording context for reverse-mode differentiation.

    Nodes are appended in execution order, so the record list is already a
    topological order and the backward walk is a single reversed pass.
    """

    def __init__(self):
        self._nodes = []       # (out, parents, vjp) with vjp(g) -> tuple
        self._on = {}          # id(tensor) -> tensor, for tracks() and liveness

    def __enter__(self):
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _tape_stack().pop()
        assert popped is self, "mismatched GradTape nesting"
        return False

    @staticmethod
    def current():
        stack = _tape_stack()
        return stack[-1] if stack else None

    def tracks(self, t):
        return t.requires_grad or id(t) in self._on

    def record(self, out, parents, vjp):
        self._nodes.append((out, parents, vjp))
        self._on[id(out)] = out

    def grad(self, loss, params):
        """Gradients of a scalar `loss` w.r.t. named parameter tensors.

        Parameters never touched by the recorded ops get zero gradients;
        a parameter that is not tracked at all is an error.
        """
        if loss.data.size != 1:
            raise NumericsError(f"loss must be scalar, got shape {loss.data.shape}")
        if id(loss) not in self._on:
            raise NumericsError("loss was not produced on this tape")
        for name, p in params.items():
            if not self.tracks(p):
                raise NumericsError(f"parameter {name!r} is not on the tape")

        adjoint = {id(loss): np.ones_like(loss.data)}
        for out, parents, vjp in reversed(self._nodes):
            g = adjoint.pop(id(out), None)
            if g is None:
                continue
            for parent, pg in zip(parents, vjp(g)):
                if pg is None:
                    continue
                key = id(parent)
                prev = adjoint.get(key)
                adjoint[key] = pg if prev is None else prev + pg

        grads = {}
        for name, p in params.items():
            g = adjoint.get(id(p))
            if g is None:
                grads[name] = Tensor(np.zeros_like(p.data))
            else:
                grads[name] = Tensor(np.reshape(g, p.data.shape))
        return grads


def _wrap(x, like=None):
    if isinstance(x, Tensor):
        return x
    dtype = like.data.dtype if like is not None else None
    return Tensor(np.asarray(x, dtype=dtype))


def _unbroadcast(g, shape):
    """Sum `g` down to `shape`, inverting numpy broadcasting."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _check_dtypes(a, b, op):
    if a.data.dtype != b.data.dtype:
        raise NumericsError(
            f"{op}: mixed dtypes {a.data.dtype} and {b.data.dtype}")


def _finish(out_data, parents_and_vjps):
    """Wrap `out_data`; record on the active tape if any parent is tracked.

    parents_and_vjps: list of (parent, make_vjp) where make_vjp is called
    only for tracked parents and returns a single-gradient closure.
    """
    out = Tensor(out_data)
    tape = GradTape.current()
    if tape is None:
        return out
    tracked = [(p, mk) for p, mk in parents_and_vjps if tape.tracks(p)]
    if not tracked:
        return out
    parents = tuple(p for p, _ in tracked)
    fns = [mk() for _, mk in tracked]

    def vjp(g):
        return tuple(fn(g) for fn in fns)

    tape.record(out, parents, vjp)
    return out


def add(a, b):
    a = _wrap(a, b if isinstance(b, Tensor) else None)
    b = _wrap(b, a)
    _check_dtypes(a, b, "add")
    return _finish(a.data + b.data, [
        (a, lambda: lambda g: _unbroadcast(g, a.data.shape)),
        (b, lambda: lambda g: _unbroadcast(g, b.data.shape)),
    ])


def sub(a, b):
    a = _wrap(a, b if isinstance(b, Tensor) else None)
    b = _wrap(b, a)
    _check_dtypes(a, b, "sub")
    return _finish(a.data - b.data, [
        (a, lambda: lambda g: _unbroadcast(g, a.data.shape)),
        (b, lambda: lambda g: _unbroadcast(-g, b.data.shape)),
    ])


def mul(a, b):
    a = _wrap(a, b if isinstance(b, Tensor) else None)
    b = _wrap(b, a)
    _check_dtypes(a, b, "mul")
    return _finish(a.data * b.data, [
        (a, lambda: lambda g: _unbroadcast(g * b.data, a.data.shape)),
        (b, lambda: lambda g: _unbroadcast(g * a.data, b.data.shape)),
    ])


def div(a, b):
    a = _wrap(a, b if isinstance(b, Tensor) else None)
    b = _wrap(b, a)
    _check_dtypes(a, b, "div")
    return _finish(a.data / b.data, [
        (a, lambda: lambda g: _unbroadcast(g / b.data, a.data.shape)),
        (b, lambda: lambda g: _unbroadcast(-g * a.data / (b.data * b.data),
                                           b.data.shape)),
    ])


def neg(a):
    return _finish(-a.data, [(a, lambda: lambda g: -g)])


def matmul(a, b):
    _check_dtypes(a, b, "matmul")
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise NumericsError("matmul expects 2-D operands")
    return _finish(a.data @ b.data, [
        (a, lambda: lambda g: g @ b.data.T),
        (b, lambda: lambda g: a.data.T @ g),
    ])


def tanh(a):
    out_data = np.tanh(a.data)
    return _finish(out_data, [(a, lambda: lambda g: g * (1.0 - out_data * out_data))])


def sigmoid(a):
    out_data = expit(a.data)
    return _finish(out_data, [(a, lambda: lambda g: g * out_data * (1.0 - out_data))])


def relu(a):
    out_data = np.maximum(a.data, 0.0)
    return _finish(out_data, [(a, lambda: lambda g: g * (a.data > 0))])


def exp(a):
    out_data = np.exp(a.data)
    return _finish(out_data, [(a, lambda: lambda g: g * out_data)])


def log(a):
    return _finish(np.log(a.data), [(a, lambda: lambda g: g / a.data)])


def sum_(a, axis=None, keepdims=False):
    out_data = a.data.sum(axis=axis, keepdims=keepdims)

    def mk():
        def vjp(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return np.broadcast_to(g, a.data.shape).copy()
        return vjp

    return _finish(out_data, [(a, mk)])


def mean_(a, axis=None, keepdims=False):
    n = a.data.size if axis is None else np.prod(
        [a.data.shape[ax] for ax in np.atleast_1d(axis)])
    return mul(sum_(a, axis=axis, keepdims=keepdims), 1.0 / float(n))


def max_(a, axis, keepdims=False):
    """Max over an axis; ties split the gradient equally."""
    out_data = a.data.max(axis=axis, keepdims=keepdims)

    def mk():
        def vjp(g):
            full = out_data if keepdims else np.expand_dims(out_data, axis)
            mask = (a.data == full)
            count = mask.sum(axis=axis, keepdims=True)
            gg = g if keepdims else np.expand_dims(g, axis)
            return mask * (gg / count)
        return vjp

    return _finish(out_data, [(a, mk)])


def reshape(a, shape):
    return _finish(np.reshape(a.data, shape),
                   [(a, lambda: lambda g: np.reshape(g, a.data.shape))])


def transpose(a, axes):
    inv = np.argsort(axes)
    return _finish(np.transpose(a.data, axes),
                   [(a, lambda: lambda g: np.transpose(g, inv))])


def concat(tensors, axis):
    dt = tensors[0].data.dtype
    for t in tensors:
        if t.data.dtype != dt:
            raise NumericsError("concat: mixed dtypes")
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def mk(i):
        def factory():
            def vjp(g):
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(offsets[i], offsets[i + 1])
                return g[tuple(sl)]
            return vjp
        return factory

    return _finish(np.concatenate([t.data for t in tensors], axis=axis),
                   [(t, mk(i)) for i, t in enumerate(tensors)])


def softmax(a, axis=-1):
    """Numerically stable softmax along `axis`."""
    m = a.data.max(axis=axis, keepdims=True)
    e = np.exp(a.data - m)
    out_data = e / e.sum(axis=axis, keepdims=True)

    def mk():
        def vjp(g):
            s = (g * out_data).sum(axis=axis, keepdims=True)
            return out_data * (g - s)
        return vjp

    return _finish(out_data, [(a, mk)])


def masked_softmax(a, valid, axis=-1):
    """Softmax over positions where `valid` (bool array) is True.

    Masked positions get probability exactly 0. Raises if any slice along
    `axis` has no valid position.
    """
    valid = np.asarray(valid, dtype=bool)
    if not valid.any(axis=axis).all():
        raise NumericsError("masked_softmax: a slice has zero valid entries")
    neg_inf = np.array(-np.inf, dtype=a.data.dtype)
    masked = np.where(valid, a.data, neg_inf)
    m = masked.max(axis=axis, keepdims=True)
    e = np.exp(masked - m)
    out_data = e / e.sum(axis=axis, keepdims=True)

    def mk():
        def vjp(g):
            s = (g * out_data).sum(axis=axis, keepdims=True)
            return out_data * (g - s)
        return vjp

    return _finish(out_data, [(a, mk)])


def logsumexp(a, axis=-1):
    m = a.data.max(axis=axis, keepdims=True)
    e = np.exp(a.data - m)
    se = e.sum(axis=axis, keepdims=True)
    out_data = np.squeeze(np.log(se) + m, axis=axis)
    soft = e / se

    def mk():
        def vjp(g):
            return np.expand_dims(g, axis) * soft
        return vjp

    return _finish(out_data, [(a, mk)])


def take_class(a, idx):
    """Pick one column per row: out[i] = a[i, idx[i]]."""
    idx = np.asarray(idx)
    rows = np.arange(a.data.shape[0])

    def mk():
        def vjp(g):
            out = np.zeros_like(a.data)
            np.add.at(out, (rows, idx), g)
            return out
        return vjp

    return _finish(a.data[rows, idx], [(a, mk)])


def reverse_by_length(a, lengths):
    """Reverse each row's leading `lengths[b]` frames; the tail stays put.

    a: (B, T, D); self-inverse, so the vjp is the same transform.
    """
    lengths = np.asarray(lengths)

    def rev(x):
        out = x.copy()
        for b, L in enumerate(lengths):
            out[b, :L] = x[b, L - 1::-1]
        return out

    return _finish(rev(a.data), [(a, lambda: rev)])


def select_last(a, lengths):
    """out[b] = a[b, lengths[b]-1]; the final valid frame of each row."""
    lengths = np.asarray(lengths)
    rows = np.arange(a.data.shape[0])

    def mk():
        def vjp(g):
            out = np.zeros_like(a.data)
            out[rows, lengths - 1] = g
            return out
        return vjp

    return _finish(a.data[rows, lengths - 1], [(a, mk)])


def lstm_seq(xp, w_h):
    """Fused single-direction LSTM over a batch.

    xp: (B, T, 4H) precomputed input projections, w_h: (H, 4H).
    Returns hidden states (B, T, H). Runs on the selected kernel backend.
    """
    _check_dtypes(xp, w_h, "lstm_seq")
    xp_t = np.ascontiguousarray(np.transpose(xp.data, (1, 0, 2)))
    h_t, cache = backend.lstm_forward(xp_t, w_h.data)
    out_data = np.ascontiguousarray(np.transpose(h_t, (1, 0, 2)))

    state = {}

    def run_backward(g):
        if state.get("key") != id(g):
            g_t = np.ascontiguousarray(np.transpose(g, (1, 0, 2)))
            d_xp, d_wh = backend.lstm_backward(g_t, w_h.data, cache)
            state["key"] = id(g)
            state["d_xp"] = np.transpose(d_xp, (1, 0, 2))
            state["d_wh"] = d_wh
        return state

    return _finish(out_data, [
        (xp, lambda: lambda g: run_backward(g)["d_xp"]),
        (w_h, lambda: lambda g: run_backward(g)["d_wh"]),
    ])
