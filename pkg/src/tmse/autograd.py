"""A small reverse-mode automatic differentiation engine over numpy arrays.

Every operation on a :class:`Tensor` records its parents and a vector-Jacobian
product; :func:`grad` walks that graph backwards from a scalar. Only what the
predictors and losses need is supported: elementwise arithmetic with
broadcasting, two-operand einsum, 2-D convolution, a few smooth
nonlinearities, reductions, reshaping/indexing, concatenation and arbitrary
linear maps given with their adjoint.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np


class Tensor:
    __slots__ = ("data", "requires_grad", "parents", "vjp", "name")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, parents: tuple = (), vjp=None, name: str = ""):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.parents = parents
        self.vjp = vjp
        self.name = name

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{', ' + self.name if self.name else ''})"

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, -as_tensor(other))

    def __rsub__(self, other):
        return add(as_tensor(other), -self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return mul(self, reciprocal(as_tensor(other)))

    def __rtruediv__(self, other):
        return mul(as_tensor(other), reciprocal(self))

    def __neg__(self):
        return _op(-self.data, (self,), lambda g: (-g,))

    def __pow__(self, p: float):
        x = self.data
        return _op(x**p, (self,), lambda g: (g * p * x ** (p - 1),))

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        shape = self.data.shape

        def vjp(g):
            out = np.zeros(shape)
            np.add.at(out, idx, g)
            return (out,)

        return _op(self.data[idx], (self,), vjp)

    # shape ---------------------------------------------------------------
    def reshape(self, *shape):
        old = self.data.shape
        return _op(self.data.reshape(*shape), (self,), lambda g: (g.reshape(old),))

    def transpose(self, *axes):
        axes = axes or tuple(reversed(range(self.ndim)))
        inv = np.argsort(axes)
        return _op(self.data.transpose(axes), (self,), lambda g: (g.transpose(inv),))

    def sum(self, axis=None, keepdims: bool = False):
        shape = self.data.shape

        def vjp(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape).copy(),)

        return _op(self.data.sum(axis=axis, keepdims=keepdims), (self,), vjp)

    def mean(self, axis=None, keepdims: bool = False):
        n = self.data.size if axis is None else np.prod([self.data.shape[a] for a in np.atleast_1d(axis)])
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(value, name: str = "") -> Tensor:
    return Tensor(np.array(value, dtype=np.float64), requires_grad=True, name=name)


def _op(data, parents: tuple, vjp) -> Tensor:
    req = any(p.requires_grad for p in parents)
    return Tensor(data, req, parents if req else (), vjp if req else None)


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, n in enumerate(shape):
        if n == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return _op(a.data + b.data, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    x, y = a.data, b.data
    return _op(x * y, (a, b), lambda g: (_unbroadcast(g * y, x.shape), _unbroadcast(g * x, y.shape)))


def reciprocal(a: Tensor) -> Tensor:
    x = a.data
    return _op(1.0 / x, (a,), lambda g: (-g / x**2,))


def einsum(spec: str, a, b) -> Tensor:
    """Two-operand einsum; every input index must appear in the output or the other operand."""
    a, b = as_tensor(a), as_tensor(b)
    lhs, out = spec.replace(" ", "").split("->")
    sa, sb = lhs.split(",")
    for s, other in ((sa, sb), (sb, sa)):
        if any(c not in out and c not in other for c in s) or len(set(s)) != len(s):
            raise ValueError(f"unsupported einsum pattern {spec!r}")
    x, y = a.data, b.data

    def vjp(g):
        return np.einsum(f"{out},{sb}->{sa}", g, y), np.einsum(f"{out},{sa}->{sb}", g, x)

    return _op(np.einsum(spec, x, y), (a, b), vjp)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("matmul supports 2-D operands; use einsum for batches")
    return einsum("ij,jk->ik", a, b)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return _op(
        np.concatenate([t.data for t in tensors], axis=axis),
        tuple(tensors),
        lambda g: tuple(np.split(g, sizes, axis=axis)),
    )


# nonlinearities ---------------------------------------------------------------


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    return _op(y, (a,), lambda g: (g * (1.0 - y**2),))


def sigmoid(a: Tensor) -> Tensor:
    y = 0.5 * (1.0 + np.tanh(0.5 * a.data))
    return _op(y, (a,), lambda g: (g * y * (1.0 - y),))


def silu(a: Tensor) -> Tensor:
    x = a.data
    s = 0.5 * (1.0 + np.tanh(0.5 * x))
    return _op(x * s, (a,), lambda g: (g * (s + x * s * (1.0 - s)),))


def exp(a: Tensor) -> Tensor:
    y = np.exp(a.data)
    return _op(y, (a,), lambda g: (g * y,))


def log(a: Tensor) -> Tensor:
    x = a.data
    return _op(np.log(x), (a,), lambda g: (g / x,))


def sqrt(a: Tensor) -> Tensor:
    y = np.sqrt(a.data)
    return _op(y, (a,), lambda g: (g * 0.5 / np.where(y > 0, y, np.inf),))


def abs(a: Tensor) -> Tensor:  # noqa: A001 - mirrors numpy naming
    x = a.data
    return _op(np.abs(x), (a,), lambda g: (g * np.sign(x),))


def clip_max(a: Tensor, limit: float) -> Tensor:
    """``min(a, limit)``; gradient is zero where the limit is active."""
    x = a.data
    return _op(np.minimum(x, limit), (a,), lambda g: (g * (x < limit),))


def complex_abs(re: Tensor, im: Tensor) -> Tensor:
    """``sqrt(re^2 + im^2)`` with a zero subgradient at the origin."""
    r, i = re.data, im.data
    m = np.hypot(r, i)
    safe = np.where(m > 0, m, 1.0)

    def vjp(g):
        scale = np.where(m > 0, g / safe, 0.0)
        return scale * r, scale * i

    return _op(m, (re, im), vjp)


# structured linear maps ---------------------------------------------------------


def linear_op(x: Tensor, forward: Callable, adjoint: Callable) -> Tensor:
    """Apply a fixed linear map given by ``forward`` and its transpose ``adjoint``."""
    return _op(forward(x.data), (x,), lambda g: (adjoint(g),))


def custom(inputs: Sequence[Tensor], value: np.ndarray, vjp: Callable) -> Tensor:
    """Wrap a precomputed ``value`` whose vector-Jacobian product is ``vjp(g) -> grads``."""
    return _op(value, tuple(inputs), vjp)


def _pair(v):
    return (v, v) if np.isscalar(v) else tuple(v)


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None, stride=1, padding=0, dilation=1) -> Tensor:
    """Cross-correlation of ``x (B, Cin, H, W)`` with ``w (Cout, Cin, kh, kw)``.

    ``padding`` is ``(ph, pw)`` applied symmetrically, or ``((top, bottom), (left, right))``.
    """
    sh, sw = _pair(stride)
    dh, dw = _pair(dilation)
    if np.isscalar(padding):
        pads = ((padding, padding), (padding, padding))
    else:
        pads = tuple(_pair(p) for p in padding)
    xd, wd = x.data, w.data
    B, C, H, W = xd.shape
    O, Ci, kh, kw = wd.shape
    if Ci != C:
        raise ValueError(f"conv2d expects {Ci} input channels, got {C}")
    xp = np.pad(xd, ((0, 0), (0, 0), pads[0], pads[1]))
    Hp, Wp = xp.shape[2:]
    Ho = (Hp - dh * (kh - 1) - 1) // sh + 1
    Wo = (Wp - dw * (kw - 1) - 1) // sw + 1
    cols = np.empty((B, C, kh, kw, Ho, Wo))
    for i in range(kh):
        for j in range(kw):
            cols[:, :, i, j] = xp[:, :, i * dh : i * dh + sh * (Ho - 1) + 1 : sh, j * dw : j * dw + sw * (Wo - 1) + 1 : sw]
    out = np.einsum("bcijhw,ocij->bohw", cols, wd, optimize=True)
    if b is not None:
        out = out + b.data[None, :, None, None]

    def vjp(g):
        gw = np.einsum("bohw,bcijhw->ocij", g, cols, optimize=True)
        gcols = np.einsum("bohw,ocij->bcijhw", g, wd, optimize=True)
        gxp = np.zeros_like(xp)
        for i in range(kh):
            for j in range(kw):
                gxp[:, :, i * dh : i * dh + sh * (Ho - 1) + 1 : sh, j * dw : j * dw + sw * (Wo - 1) + 1 : sw] += gcols[:, :, i, j]
        gx = gxp[:, :, pads[0][0] : Hp - pads[0][1], pads[1][0] : Wp - pads[1][1]]
        grads = (gx, gw)
        if b is not None:
            grads += (g.sum(axis=(0, 2, 3)),)
        return grads

    parents = (x, w) if b is None else (x, w, b)
    return _op(out, parents, vjp)


# backward pass --------------------------------------------------------------------


def _toposort(root: Tensor) -> list[Tensor]:
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def grad(loss: Tensor, params: Iterable[Tensor]) -> list[np.ndarray]:
    """Gradients of a scalar ``loss`` w.r.t. ``params``; unreachable parameters get zeros."""
    params = list(params)
    if loss.data.size != 1:
        raise ValueError("grad needs a scalar loss")
    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(_toposort(loss)):
        g = grads.pop(id(node), None) if node.parents else grads.get(id(node))
        if g is None or node.vjp is None:
            continue
        for parent, pg in zip(node.parents, node.vjp(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = grads[key] + pg if key in grads else np.asarray(pg, dtype=np.float64)
    return [grads.get(id(p), np.zeros_like(p.data)) for p in params]
