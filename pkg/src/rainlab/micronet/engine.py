"""A minimal reverse-mode autodiff engine over NumPy arrays.

Image batches are stored channels-last, ``(batch, height, width, channels)``,
which lets each 3x3 convolution tap run as one BLAS matmul. Conv kernels
are laid out ``(kh, kw, c_in, c_out)``.

Every op checks its result for NaN/Inf and raises :class:`NumericError`.
"""
from contextlib import contextmanager

import numpy as np

from ..errors import NumericError, ShapeError, StateError

_GRAD_ENABLED = True


@contextmanager
def no_grad():
    """Run ops without recording a graph (inference)."""
    global _GRAD_ENABLED
    prev, _GRAD_ENABLED = _GRAD_ENABLED, False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, dtype={self.dtype})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)


def _check(arr, op):
    if not np.isfinite(arr).all():
        raise NumericError(f"non-finite value produced by {op}")
    return arr


def _result(data, parents, backward, op):
    out = Tensor(_check(data, op))
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _match(a, b, op):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes differ, {a.shape} vs {b.shape}")


# -- elementwise ---------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _match(a, b, "add")
    return _result(a.data + b.data, (a, b), lambda g: (g, g), "add")


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _match(a, b, "sub")
    return _result(a.data - b.data, (a, b), lambda g: (g, -g), "sub")


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _match(a, b, "mul")
    ad, bd = a.data, b.data
    return _result(ad * bd, (a, b), lambda g: (g * bd, g * ad), "mul")


def relu(x) -> Tensor:
    x = _as_tensor(x)
    pos = x.data > 0
    return _result(np.where(pos, x.data, 0).astype(x.dtype), (x,),
                   lambda g: (g * pos,), "relu")


def absolute(x) -> Tensor:
    x = _as_tensor(x)
    s = np.sign(x.data)
    return _result(np.abs(x.data), (x,), lambda g: (g * s,), "abs")


def mean(x) -> Tensor:
    x = _as_tensor(x)
    n = x.data.size
    shape, dtype = x.shape, x.dtype

    def backward(g):
        return (np.full(shape, g.reshape(-1)[0] / n, dtype=dtype),)

    return _result(np.asarray(x.data.mean(), dtype=dtype).reshape(()), (x,), backward, "mean")


def l1_loss(pred, target) -> Tensor:
    """Mean absolute error over all elements."""
    pred, target = _as_tensor(pred), _as_tensor(target)
    _match(pred, target, "l1_loss")
    diff = pred.data - target.data
    n = diff.size
    s = np.sign(diff)

    def backward(g):
        gp = s * (g.reshape(-1)[0] / n)
        return gp, -gp

    value = np.asarray(np.abs(diff).mean(), dtype=diff.dtype).reshape(())
    return _result(value, (pred, target), backward, "l1_loss")


# -- convolution ---------------------------------------------------------------

def conv2d_forward(x, w, b):
    """Stride-1 'same' cross-correlation on raw arrays; returns (out, padded_x)."""
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeError(f"conv2d expects 4-D input and kernel, got {x.shape}, {w.shape}")
    kh, kw, cin, cout = w.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise ShapeError(f"conv2d kernel must have odd size, got {kh}x{kw}")
    n, h, wd, c = x.shape
    if c != cin:
        raise ShapeError(f"conv2d: input has {c} channels, kernel expects {cin}")
    if b is not None and b.shape != (cout,):
        raise ShapeError(f"conv2d: bias shape {b.shape} != ({cout},)")
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw), (0, 0)))
    out = np.zeros((n, h, wd, cout), dtype=np.result_type(x, w))
    for i in range(kh):
        for j in range(kw):
            out += xp[:, i:i + h, j:j + wd, :] @ w[i, j]
    if b is not None:
        out += b
    return out, xp


def conv2d_backward(g, xp, w):
    """Gradients (dx, dw, db) of :func:`conv2d_forward` for upstream ``g``."""
    kh, kw, cin, cout = w.shape
    n, h, wd, _ = g.shape
    g2 = g.reshape(-1, cout)
    dxp = np.zeros_like(xp)
    dw = np.empty_like(w)
    for i in range(kh):
        for j in range(kw):
            xs = np.ascontiguousarray(xp[:, i:i + h, j:j + wd, :]).reshape(-1, cin)
            dw[i, j] = xs.T @ g2
            dxp[:, i:i + h, j:j + wd, :] += (g2 @ w[i, j].T).reshape(n, h, wd, cin)
    ph, pw = kh // 2, kw // 2
    dx = dxp[:, ph:ph + h, pw:pw + wd, :]
    db = g2.sum(axis=0)
    return dx, dw, db


def conv2d(x, w, b=None) -> Tensor:
    x, w = _as_tensor(x), _as_tensor(w)
    b = _as_tensor(b) if b is not None else None
    out, xp = conv2d_forward(x.data, w.data, None if b is None else b.data)
    wd = w.data
    if not (_GRAD_ENABLED and (x.requires_grad or w.requires_grad or (b is not None and b.requires_grad))):
        xp = None

    def backward(g):
        dx, dw, db = conv2d_backward(g, xp, wd)
        return (dx, dw) if b is None else (dx, dw, db)

    parents = (x, w) if b is None else (x, w, b)
    return _result(out, parents, backward, "conv2d")


# -- backward pass -------------------------------------------------------------

def _topo_order(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor):
    """Accumulate d(loss)/d(leaf) into ``.grad`` of every leaf that requires it.

    The recorded graph is released afterwards; calling again without a new
    forward pass raises :class:`StateError`.
    """
    if loss._backward is None:
        raise StateError("backward called on a tensor with no recorded forward graph")
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    order = _topo_order(loss)
    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            if node.requires_grad:
                node.grad = g.copy() if node.grad is None else node.grad + g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if not parent.requires_grad:
                continue
            _check(pg, "backward")
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg
        node._parents = ()
        node._backward = None
