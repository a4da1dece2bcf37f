"""A small tape-based reverse-mode autodiff over numpy arrays.

Only the operations the U-Net, the patch discriminator and the loss stack
need are provided. Every op returns a :class:`Tensor` that remembers its
parents and a closure mapping the upstream gradient to parent gradients.
"""
import numpy as np

from . import kernels


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "parents", "backward_fn", "name")

    def __init__(self, data, requires_grad=False, parents=(), backward_fn=None, name=None):
        self.data = data if isinstance(data, np.ndarray) else np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad
        self.parents = parents
        self.backward_fn = backward_fn
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data)

    def detach(self):
        return Tensor(self.data)

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.data.shape}, dtype={self.data.dtype})"

    # arithmetic sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(as_tensor(other, self.dtype), self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)


def as_tensor(x, dtype=None):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def _node(data, parents, fn):
    req = any(p.requires_grad for p in parents)
    if not req:
        return Tensor(data)
    return Tensor(data, True, tuple(parents), fn)


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# ---------------------------------------------------------------- elementwise

def add(a, b):
    a, b = as_tensor(a), as_tensor(b, a.dtype if isinstance(a, Tensor) else None)
    out = a.data + b.data
    return _node(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = a.data - b.data
    return _node(out, (a, b), lambda g: (_unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)))


def mul(a, b):
    a = as_tensor(a)
    if not isinstance(b, Tensor):
        c = np.asarray(b, dtype=a.dtype)
        return _node(a.data * c, (a,), lambda g: (g * c,))
    out = a.data * b.data
    return _node(out, (a, b), lambda g: (_unbroadcast(g * b.data, a.shape),
                                         _unbroadcast(g * a.data, b.shape)))


def log(a):
    return _node(np.log(a.data), (a,), lambda g: (g / a.data,))


def absolute(a):
    return _node(np.abs(a.data), (a,), lambda g: (g * np.sign(a.data),))


def clip(a, lo, hi):
    out = np.clip(a.data, lo, hi)
    inside = (a.data >= lo) & (a.data <= hi)
    return _node(out, (a,), lambda g: (g * inside,))


def sigmoid(a):
    x = a.data
    # split by sign to avoid overflow in exp
    e = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(x.dtype, copy=False)
    return _node(out, (a,), lambda g: (g * out * (1 - out),))


def tanh(a):
    out = np.tanh(a.data)
    return _node(out, (a,), lambda g: (g * (1 - out * out),))


def relu(a):
    mask = a.data > 0
    return _node(a.data * mask, (a,), lambda g: (g * mask,))


def leaky_relu(a, slope=0.2):
    x = a.data
    scale = np.where(x > 0, 1.0, slope).astype(x.dtype, copy=False)
    return _node(x * scale, (a,), lambda g: (g * scale,))


ACTIVATIONS = {"sigmoid": sigmoid, "tanh": tanh, "relu": relu, "leaky_relu": leaky_relu}


def activation(kind, x, slope=0.2):
    """Apply ``kind`` elementwise. ``slope`` only matters for leaky_relu."""
    try:
        fn = ACTIVATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}") from None
    x = as_tensor(x)
    return fn(x, slope) if kind == "leaky_relu" else fn(x)


# ---------------------------------------------------------------- reductions / shape

def sum_(a, axis=None):
    out = np.sum(a.data, axis=axis)
    shape = a.shape

    def fn(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).astype(a.dtype),)

    return _node(np.asarray(out, dtype=a.dtype), (a,), fn)


def mean(a, axis=None):
    n = a.data.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    return mul(sum_(a, axis), 1.0 / n)


def concat(tensors, axis=1):
    out = np.concatenate([t.data for t in tensors], axis=axis)
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def fn(g):
        return tuple(np.take(g, np.arange(bounds[i], bounds[i + 1]), axis=axis)
                     for i in range(len(tensors)))

    return _node(out, tuple(tensors), fn)


# ---------------------------------------------------------------- convolutions

def _check_conv(x, w, stride, pad, transposed):
    if x.data.ndim != 4 or w.data.ndim != 4:
        raise ValueError(f"expected 4-d input and weights, got {x.shape} and {w.shape}")
    cin = w.shape[0] if transposed else w.shape[1]
    if x.shape[1] != cin:
        raise ValueError(f"channel mismatch: input has {x.shape[1]} channels, "
                         f"weights {w.shape} expect {cin}")
    if w.shape[2] != w.shape[3]:
        raise ValueError(f"only square kernels are supported, got {w.shape[2]}x{w.shape[3]}")
    if stride < 1 or pad < 0:
        raise ValueError(f"stride must be >= 1 and pad >= 0 (got {stride}, {pad})")
    k = w.shape[2]
    if not transposed and (k > x.shape[2] + 2 * pad or k > x.shape[3] + 2 * pad):
        raise ValueError(f"kernel {k}x{k} exceeds padded input "
                         f"{x.shape[2] + 2 * pad}x{x.shape[3] + 2 * pad}")


def conv2d(x, w, b=None, stride=1, pad=0):
    """Cross-correlation with weights ``(C_out, C_in, k, k)``."""
    x, w = as_tensor(x), as_tensor(w)
    _check_conv(x, w, stride, pad, transposed=False)
    h, wd, k = x.shape[2], x.shape[3], w.shape[2]
    out = kernels.conv_forward(x.data, w.data, stride, pad)

    def fn(g):
        gx = kernels.conv_input_grad(g, w.data, h, wd, stride, pad) if x.requires_grad else None
        gw = kernels.conv_weight_grad(x.data, g, k, stride, pad) if w.requires_grad else None
        return gx, gw

    y = _node(out, (x, w), fn)
    return y if b is None else add(y, _bias_view(b))


def transposed_conv2d(x, w, b=None, stride=1, pad=0):
    """Adjoint of :func:`conv2d`; weights are ``(C_in, C_out, k, k)``."""
    x, w = as_tensor(x), as_tensor(w)
    _check_conv(x, w, stride, pad, transposed=True)
    k = w.shape[2]
    h = kernels.transposed_extent(x.shape[2], k, stride, pad)
    wd = kernels.transposed_extent(x.shape[3], k, stride, pad)
    if h < 1 or wd < 1:
        raise ValueError(f"transposed conv output would be {h}x{wd}")
    out = kernels.conv_input_grad(x.data, w.data, h, wd, stride, pad)

    def fn(g):
        gx = kernels.conv_forward(g, w.data, stride, pad) if x.requires_grad else None
        gw = kernels.conv_weight_grad(g, x.data, k, stride, pad) if w.requires_grad else None
        return gx, gw

    y = _node(out, (x, w), fn)
    return y if b is None else add(y, _bias_view(b))


def _bias_view(b):
    b = as_tensor(b)
    return _node(b.data.reshape(1, -1, 1, 1), (b,), lambda g: (g.reshape(b.shape),))


# ---------------------------------------------------------------- backward

def backward(loss, params):
    """Fill ``.grad`` of every tensor in ``params`` with d(loss)/d(param).

    ``params`` may be a ParamSet or any iterable of tensors. Buffers are
    overwritten, not accumulated. Parameters the loss does not depend on
    get zero gradients.
    """
    targets = list(params.values()) if hasattr(params, "values") else list(params)
    if loss.data.size != 1:
        raise ValueError(f"loss must be a scalar, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ValueError("loss was not produced by a recorded computation over the parameters")

    order, seen = [], set()
    stack = [(loss, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))

    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if node.backward_fn is None:
            grads[id(node)] = g  # leaf: keep for harvesting
            continue
        if g is None:
            continue
        for p, gp in zip(node.parents, node.backward_fn(g)):
            if gp is None or not p.requires_grad:
                continue
            key = id(p)
            if key in grads:
                grads[key] = grads[key] + gp
            else:
                grads[key] = gp

    for t in targets:
        g = grads.get(id(t))
        t.grad = np.zeros_like(t.data) if g is None else np.asarray(g, dtype=t.dtype).reshape(t.shape)
    return targets
