"""Dense float64 tensors with tape-based reverse-mode differentiation.

Just enough machinery for 2-layer graph convolutions, mask optimisation and
fully-parameterised adjacency training: matmul, broadcast elementwise ops,
row softmax, the [0,1] projection, reductions and a couple of fused losses.
No convolutions, no sparse kernels, no higher-order derivatives.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor",
    "DimensionError",
    "DomainError",
    "ContractError",
    "matmul",
    "make_op",
    "add",
    "sub",
    "mul",
    "scale",
    "affine",
    "relu",
    "sigmoid",
    "softmax_row",
    "log",
    "clamp01",
    "transpose",
    "reshape",
    "tsum",
    "tmean",
    "sum_axis",
    "rsqrt_or_zero",
    "gather_rc",
    "bce_with_logits_mean",
    "cross_entropy_rows",
    "elementwise",
    "backward",
    "zero_grad",
]


class DimensionError(ValueError):
    """Operand shapes are incompatible for the requested operation."""


class DomainError(ValueError):
    """Operand values lie outside the operation's domain."""


class ContractError(RuntimeError):
    """An operation's precondition was violated."""


class Tensor:
    """A float64 array plus an optional gradient buffer of the same shape."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    def accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            # first contribution: one copy instead of a zero-fill plus add
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, backward_fn) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def make_op(data, parents, backward_fn) -> Tensor:
    """Register a custom fused operation on the tape.

    ``backward_fn(g)`` must accumulate into each requires_grad parent.
    """
    return _make(data, tuple(parents), backward_fn)


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Reduce a broadcast gradient back to the operand's shape."""
    if g.shape == tuple(shape):
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# linear algebra


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise DimensionError(
            f"matmul shapes incompatible: {a.data.shape} x {b.data.shape}"
        )
    out_data = a.data @ b.data

    def bwd(g):
        if a.requires_grad:
            a.accumulate(g @ b.data.T)
        if b.requires_grad:
            b.accumulate(a.data.T @ g)

    return _make(out_data, (a, b), bwd)


def transpose(x) -> Tensor:
    x = _as_tensor(x)

    def bwd(g):
        if x.requires_grad:
            x.accumulate(g.T)

    return _make(x.data.T, (x,), bwd)


def reshape(x, shape) -> Tensor:
    x = _as_tensor(x)
    orig = x.data.shape

    def bwd(g):
        if x.requires_grad:
            x.accumulate(g.reshape(orig))

    return _make(x.data.reshape(shape), (x,), bwd)


# ---------------------------------------------------------------------------
# broadcast elementwise


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out_data = a.data + b.data
    except ValueError as e:
        raise DimensionError(str(e)) from e

    def bwd(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(g, b.data.shape))

    return _make(out_data, (a, b), bwd)


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out_data = a.data - b.data
    except ValueError as e:
        raise DimensionError(str(e)) from e

    def bwd(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(-g, b.data.shape))

    return _make(out_data, (a, b), bwd)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out_data = a.data * b.data
    except ValueError as e:
        raise DimensionError(str(e)) from e

    def bwd(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(g * a.data, b.data.shape))

    return _make(out_data, (a, b), bwd)


def scale(x, c: float) -> Tensor:
    x = _as_tensor(x)
    c = float(c)

    def bwd(g):
        if x.requires_grad:
            x.accumulate(g * c)

    return _make(x.data * c, (x,), bwd)


def affine(x, a: float, b: float) -> Tensor:
    """a * x + b with scalar a, b."""
    x = _as_tensor(x)
    a, b = float(a), float(b)

    def bwd(g):
        if x.requires_grad:
            x.accumulate(g * a)

    return _make(a * x.data + b, (x,), bwd)


# ---------------------------------------------------------------------------
# nonlinearities


def relu(x) -> Tensor:
    x = _as_tensor(x)
    mask = x.data > 0
    out_data = np.where(mask, x.data, 0.0)

    def bwd(g):
        if x.requires_grad:
            x.accumulate(g * mask)

    return _make(out_data, (x,), bwd)


def sigmoid(x) -> Tensor:
    x = _as_tensor(x)
    # Split by sign to avoid overflow in exp.
    out_data = np.where(
        x.data >= 0,
        1.0 / (1.0 + np.exp(-np.abs(x.data))),
        np.exp(-np.abs(x.data)) / (1.0 + np.exp(-np.abs(x.data))),
    )

    def bwd(g):
        if x.requires_grad:
            x.accumulate(g * out_data * (1.0 - out_data))

    return _make(out_data, (x,), bwd)


def softmax_row(x) -> Tensor:
    x = _as_tensor(x)
    if x.data.ndim != 2:
        raise DimensionError("softmax_row expects a 2-D tensor")
    z = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    out_data = e / e.sum(axis=1, keepdims=True)

    def bwd(g):
        if x.requires_grad:
            dot = (g * out_data).sum(axis=1, keepdims=True)
            x.accumulate(out_data * (g - dot))

    return _make(out_data, (x,), bwd)


def log(x) -> Tensor:
    x = _as_tensor(x)
    if np.any(x.data <= 0):
        raise DomainError("log of non-positive value")
    out_data = np.log(x.data)

    def bwd(g):
        if x.requires_grad:
            x.accumulate(g / x.data)

    return _make(out_data, (x,), bwd)


def clamp01(x) -> Tensor:
    """Projection onto [0,1]: 0 below, 1 above, identity inside.

    Subgradient convention: pass-through on the closed interval [0,1] so
    parameters sitting exactly on the boundary can still move inward.
    """
    x = _as_tensor(x)
    out_data = np.clip(x.data, 0.0, 1.0)
    inside = (x.data >= 0.0) & (x.data <= 1.0)

    def bwd(g):
        if x.requires_grad:
            x.accumulate(g * inside)

    return _make(out_data, (x,), bwd)


# ---------------------------------------------------------------------------
# reductions


def tsum(x) -> Tensor:
    x = _as_tensor(x)

    def bwd(g):
        if x.requires_grad:
            x.accumulate(np.full_like(x.data, float(g)))

    return _make(np.array(x.data.sum()), (x,), bwd)


def tmean(x) -> Tensor:
    x = _as_tensor(x)
    n = x.data.size

    def bwd(g):
        if x.requires_grad:
            x.accumulate(np.full_like(x.data, float(g) / n))

    return _make(np.array(x.data.mean()), (x,), bwd)


def sum_axis(x, axis: int, keepdims: bool = False) -> Tensor:
    x = _as_tensor(x)
    out_data = x.data.sum(axis=axis, keepdims=keepdims)

    def bwd(g):
        if x.requires_grad:
            if not keepdims:
                g = np.expand_dims(g, axis)
            x.accumulate(np.broadcast_to(g, x.data.shape).copy())

    return _make(out_data, (x,), bwd)


def rsqrt_or_zero(x, tol: float = 0.0) -> Tensor:
    """x**-1/2 where x > tol, 0 elsewhere (degree normalisation guard)."""
    x = _as_tensor(x)
    pos = x.data > tol
    out_data = np.zeros_like(x.data)
    out_data[pos] = 1.0 / np.sqrt(x.data[pos])

    def bwd(g):
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            gx[pos] = -0.5 * g[pos] * out_data[pos] / x.data[pos]
            x.accumulate(gx)

    return _make(out_data, (x,), bwd)


def gather_rc(x, rows, cols) -> Tensor:
    """1-D tensor of x[rows[k], cols[k]]; backward scatters with accumulation."""
    x = _as_tensor(x)
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    out_data = x.data[rows, cols]

    def bwd(g):
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            np.add.at(gx, (rows, cols), g)
            x.accumulate(gx)

    return _make(out_data, (x,), bwd)


# ---------------------------------------------------------------------------
# fused losses (numerically stable closed-form backward)


def bce_with_logits_mean(logits, targets) -> Tensor:
    """Mean binary cross-entropy of sigmoid(logits) against 0/1 targets."""
    logits = _as_tensor(logits)
    t = np.asarray(targets, dtype=np.float64)
    if t.shape != logits.data.shape:
        raise DimensionError("bce_with_logits_mean: target shape mismatch")
    z = logits.data
    # max(z,0) - z*t + log(1+exp(-|z|)) is stable for any z.
    per = np.maximum(z, 0.0) - z * t + np.log1p(np.exp(-np.abs(z)))
    n = z.size

    def bwd(g):
        if logits.requires_grad:
            s = np.where(
                z >= 0,
                1.0 / (1.0 + np.exp(-np.abs(z))),
                np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))),
            )
            logits.accumulate(float(g) * (s - t) / n)

    return _make(np.array(per.mean()), (logits,), bwd)


def cross_entropy_rows(logits, labels, rows=None) -> Tensor:
    """Mean negative log-softmax of the true class over the given rows."""
    logits = _as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    if rows is None:
        rows = np.arange(logits.data.shape[0])
    rows = np.asarray(rows, dtype=np.int64)
    z = logits.data[rows]
    y = labels[rows] if labels.shape[0] == logits.data.shape[0] else labels
    zmax = z.max(axis=1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.exp(z - zmax).sum(axis=1))
    per = lse - z[np.arange(len(rows)), y]
    n = len(rows)

    def bwd(g):
        if logits.requires_grad:
            p = np.exp(z - zmax)
            p /= p.sum(axis=1, keepdims=True)
            p[np.arange(n), y] -= 1.0
            gx = np.zeros_like(logits.data)
            np.add.at(gx, rows, float(g) * p / n)
            logits.accumulate(gx)

    return _make(np.array(per.mean()), (logits,), bwd)


# ---------------------------------------------------------------------------
# spec surface: named elementwise dispatch

_ELEMENTWISE = {
    "add": add,
    "mul": mul,
    "relu": relu,
    "sigmoid": sigmoid,
    "softmax_row": softmax_row,
    "log": log,
    "clamp01": clamp01,
}


def elementwise(op: str, *args) -> Tensor:
    if op not in _ELEMENTWISE:
        raise ContractError(f"unknown elementwise op {op!r}")
    return _ELEMENTWISE[op](*args)


# ---------------------------------------------------------------------------
# reverse pass


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into every requires_grad leaf.

    Repeated calls without zero_grad keep accumulating.
    """
    if not isinstance(loss, Tensor):
        raise ContractError("backward expects a Tensor")
    if loss.data.size != 1:
        raise ContractError("backward expects a scalar loss")

    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))

    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


def zero_grad(*tensors: Tensor) -> None:
    for t in tensors:
        t.grad = None
