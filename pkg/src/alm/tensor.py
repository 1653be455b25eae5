"""Dense float64 tensors with reverse-mode differentiation.

Arrays are numpy-backed; differentiation is a tape: while a :class:`Trace`
is active, every op appends a node holding its inputs and a vector-Jacobian
callback, and :func:`backward` replays the tape in reverse.  Without an
active trace, ops are plain numpy computations and retain nothing, which is
how evaluation-mode forward passes stay memory-bounded.

Every op validates that its output is finite and raises
:class:`~alm.errors.NonFiniteError` otherwise, so downstream code may assume
finite values everywhere.

GELU uses the tanh approximation
``0.5*x*(1 + tanh(sqrt(2/pi)*(x + 0.044715*x**3)))`` with exactly those
constants; random draws come from PCG64, fixed for the life of the file
formats that embed seeds.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ConfigError, NonFiniteError, ShapeError

_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_A = 0.044715


class Tensor:
    """Dense float64 array, optionally tracking a gradient."""

    __slots__ = ("data", "grad", "requires_grad", "_in_graph")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(self.data) if requires_grad else None
        self._in_graph = requires_grad

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad.fill(0.0)

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, _wrap(other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, other)
        return mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class _Node:
    __slots__ = ("out", "inputs", "vjp")

    def __init__(self, out: Tensor, inputs: tuple[Tensor, ...], vjp: Callable):
        self.out = out
        self.inputs = inputs
        self.vjp = vjp


class Trace:
    """Ordered record of executed ops, consumed by :func:`backward`.

    Use as a context manager around the forward computation::

        with Trace() as trace:
            loss = ...
        backward(loss, trace)
    """

    def __init__(self):
        self.nodes: list[_Node] = []

    def __enter__(self) -> "Trace":
        _ACTIVE.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _ACTIVE.pop()


_ACTIVE: list[Trace] = []


def _emit(op_name: str, out_data: np.ndarray, inputs: tuple[Tensor, ...], vjp: Callable) -> Tensor:
    if not np.isfinite(out_data).all():
        raise NonFiniteError(f"non-finite values produced by {op_name}")
    out = Tensor(out_data)
    if _ACTIVE and any(t._in_graph for t in inputs):
        out._in_graph = True
        _ACTIVE[-1].nodes.append(_Node(out, inputs, vjp))
    return out


def backward(loss: Tensor, trace: Trace) -> None:
    """Populate ``grad`` on every requires_grad tensor reachable from ``loss``.

    ``loss`` must be scalar.  Gradients accumulate (callers zero them between
    steps); parameters not touched by the trace keep their zero gradient.
    """
    if loss.shape != ():
        raise ShapeError(f"backward requires a scalar loss, got shape {loss.shape}")
    if loss.requires_grad:
        loss.grad += 1.0
    flows: dict[int, np.ndarray] = {id(loss): np.ones((), dtype=np.float64)}
    for node in reversed(trace.nodes):
        g = flows.pop(id(node.out), None)
        if g is None:
            continue
        for t, dg in zip(node.inputs, node.vjp(g)):
            if dg is None or not t._in_graph:
                continue
            if t.requires_grad:
                t.grad += dg
            else:
                prev = flows.get(id(t))
                flows[id(t)] = dg if prev is None else prev + dg


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce ``grad`` back to ``shape`` by summing broadcast axes."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from None


# ---------------------------------------------------------------------------
# arithmetic


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast(a, b, "add")
    out = a.data + b.data

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _emit("add", out, (a, b), vjp)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast(a, b, "sub")
    out = a.data - b.data

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _emit("sub", out, (a, b), vjp)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast(a, b, "mul")
    out = a.data * b.data

    def vjp(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _emit("mul", out, (a, b), vjp)


def scale(x: Tensor, s: float) -> Tensor:
    s = float(s)
    out = x.data * s

    def vjp(g):
        return (g * s,)

    return _emit("scale", out, (x,), vjp)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product contracting the trailing axes; leading axes broadcast."""
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ShapeError(f"matmul requires >=2-d operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: inner dims differ for shapes {a.shape} and {b.shape}")
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise ShapeError(
            f"matmul: batch dims of shapes {a.shape} and {b.shape} do not broadcast"
        ) from None
    out = a.data @ b.data

    def vjp(g):
        ga = _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape)
        gb = _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape)
        return ga, gb

    return _emit("matmul", out, (a, b), vjp)


def sum_all(x: Tensor) -> Tensor:
    out = x.data.sum()

    def vjp(g):
        return (np.full_like(x.data, float(g)),)

    return _emit("sum_all", np.asarray(out), (x,), vjp)


def mean_all(x: Tensor) -> Tensor:
    n = x.data.size
    out = x.data.mean()

    def vjp(g):
        return (np.full_like(x.data, float(g) / n),)

    return _emit("mean_all", np.asarray(out), (x,), vjp)


# ---------------------------------------------------------------------------
# nonlinearities and normalization


def gelu(x: Tensor) -> Tensor:
    u = _GELU_C * (x.data + _GELU_A * x.data**3)
    t = np.tanh(u)
    out = 0.5 * x.data * (1.0 + t)

    def vjp(g):
        du = _GELU_C * (1.0 + 3.0 * _GELU_A * x.data**2)
        dx = 0.5 * (1.0 + t) + 0.5 * x.data * (1.0 - t**2) * du
        return (g * dx,)

    return _emit("gelu", out, (x,), vjp)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable softmax along ``axis`` (max-subtraction)."""
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        inner = (g * s).sum(axis=axis, keepdims=True)
        return (s * (g - inner),)

    return _emit("softmax", s, (x,), vjp)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, axis: int = -1, eps: float = 1e-5) -> Tensor:
    """Normalize ``x`` to zero mean / unit variance along ``axis``, then affine."""
    if eps <= 0:
        raise ConfigError(f"layer_norm eps must be > 0, got {eps}")
    n = x.shape[axis]
    mu = x.data.mean(axis=axis, keepdims=True)
    xc = x.data - mu
    var = (xc**2).mean(axis=axis, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = gain.data * xhat + bias.data

    def vjp(g):
        dgain = _unbroadcast(g * xhat, gain.shape)
        dbias = _unbroadcast(g, bias.shape)
        dxhat = g * gain.data
        s1 = dxhat.sum(axis=axis, keepdims=True)
        s2 = (dxhat * xhat).sum(axis=axis, keepdims=True)
        dx = (inv / n) * (n * dxhat - s1 - xhat * s2)
        return dx, dgain, dbias

    return _emit("layer_norm", out, (x, gain, bias), vjp)


# ---------------------------------------------------------------------------
# lookups, losses, regularization


def embedding_lookup(table: Tensor, ids: np.ndarray) -> Tensor:
    """Gather rows of ``table`` by integer ``ids`` (any leading shape)."""
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ShapeError(f"embedding ids out of range [0, {table.shape[0]})")
    out = table.data[ids]

    def vjp(g):
        dt = np.zeros_like(table.data)
        np.add.at(dt, ids, g)
        return (dt,)

    return _emit("embedding_lookup", out, (table,), vjp)


def np_log_softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Plain-numpy log-softmax via stable log-sum-exp (no gradient).

    Shifting before the subtraction keeps uniform rows exact: a row of equal
    logits maps to exactly -log(row length).
    """
    z = x - x.max(axis=axis, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=axis, keepdims=True))


def cross_entropy(logits: Tensor, targets: np.ndarray, mask: np.ndarray | None = None) -> Tensor:
    """Mean negative log-likelihood of ``targets`` under ``logits`` rows.

    ``logits`` is [N, V], ``targets`` an int array of length N.  With a
    ``mask`` (0/1 per position), masked-out positions contribute neither to
    the mean nor to the gradient.
    """
    if logits.data.ndim != 2:
        raise ShapeError(f"cross_entropy expects [N, V] logits, got {logits.shape}")
    targets = np.asarray(targets)
    n, v = logits.shape
    if targets.shape != (n,):
        raise ShapeError(f"cross_entropy: {n} logit rows vs targets shape {targets.shape}")
    if targets.size and (targets.min() < 0 or targets.max() >= v):
        raise ShapeError(f"cross_entropy: target id out of range [0, {v})")
    if mask is None:
        weights = np.ones(n, dtype=np.float64)
    else:
        weights = np.asarray(mask, dtype=np.float64)
        if weights.shape != (n,):
            raise ShapeError(f"cross_entropy: mask shape {weights.shape} != ({n},)")
    denom = weights.sum()
    if denom <= 0:
        raise ShapeError("cross_entropy: mask selects no positions")
    logp = np_log_softmax(logits.data, axis=-1)
    nll = -logp[np.arange(n), targets]
    out = np.asarray((nll * weights).sum() / denom)

    def vjp(g):
        p = np.exp(logp)
        p[np.arange(n), targets] -= 1.0
        return (p * (weights / denom)[:, None] * float(g),)

    return _emit("cross_entropy", out, (logits,), vjp)


def dropout(x: Tensor, p: float, seed) -> Tensor:
    """Inverted dropout: zero with probability ``p``, scale kept values by 1/(1-p).

    ``seed`` is an int or a numpy Generator; ``p == 0`` is the identity and
    consumes no randomness.
    """
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"dropout probability must be in [0, 1), got {p}")
    if p == 0.0:
        return x
    rng = np.random.default_rng(seed)
    keep = (rng.random(x.shape) >= p) / (1.0 - p)
    out = x.data * keep

    def vjp(g):
        return (g * keep,)

    return _emit("dropout", out, (x,), vjp)


# ---------------------------------------------------------------------------
# shape ops


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    try:
        out = x.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"cannot reshape {x.shape} to {shape}") from None

    def vjp(g):
        return (g.reshape(x.shape),)

    return _emit("reshape", out, (x,), vjp)


def transpose(x: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    if axes is None:
        axes = tuple(reversed(range(x.data.ndim)))
    axes = tuple(axes)
    out = x.data.transpose(axes)
    inverse = tuple(np.argsort(axes))

    def vjp(g):
        return (g.transpose(inverse),)

    return _emit("transpose", out, (x,), vjp)


def slice_axis(x: Tensor, axis: int, start: int, stop: int) -> Tensor:
    """Slice ``x`` to [start, stop) along ``axis``."""
    index = [slice(None)] * x.data.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)
    out = x.data[index]

    def vjp(g):
        dx = np.zeros_like(x.data)
        dx[index] = g
        return (dx,)

    return _emit("slice_axis", out, (x,), vjp)


def take_positions(x: Tensor, positions: np.ndarray) -> Tensor:
    """Gather ``x[i, positions[i], :]`` from a [B, T, d] tensor -> [B, d]."""
    if x.data.ndim != 3:
        raise ShapeError(f"take_positions expects [B, T, d], got {x.shape}")
    positions = np.asarray(positions)
    rows = np.arange(x.shape[0])
    out = x.data[rows, positions]

    def vjp(g):
        dx = np.zeros_like(x.data)
        dx[rows, positions] = g
        return (dx,)

    return _emit("take_positions", out, (x,), vjp)


# ---------------------------------------------------------------------------
# random tensors


def rng_normal(shape: Sequence[int], mean: float = 0.0, std: float = 1.0, seed=0) -> Tensor:
    """Gaussian tensor, deterministic per (seed, shape). PCG64 generator."""
    if std < 0:
        raise ConfigError(f"std must be >= 0, got {std}")
    rng = np.random.default_rng(seed)
    return Tensor(rng.normal(mean, std, size=tuple(shape)))


def rng_uniform(shape: Sequence[int], low: float = 0.0, high: float = 1.0, seed=0) -> Tensor:
    """Uniform tensor on [low, high), deterministic per (seed, shape)."""
    rng = np.random.default_rng(seed)
    return Tensor(rng.uniform(low, high, size=tuple(shape)))
