#!/usr/bin/env python3
# SPDX-License-Identifier: BSD-3-Clause
# Copyright(C) 2026 robarch contributors
# Authors:
#   robarch contributors

""" Module tensor

Minimal dense tensor engine with reverse-mode differentiation.

Every operation returns a new Tensor. When at least one operand requires
gradients, the result records its parents and a closure mapping the upstream
gradient to one gradient per parent. backward() walks the recorded graph in
reverse topological order and accumulates into every tensor that requires
gradients.

All values are float64 and images use the NCHW layout.

A graph can be differentiated once. Calling backward() again on a graph whose
interior nodes were already consumed raises Unsupported.
"""




import math

import numpy as np

from .archspec import ActivationKind
from .common import ParamError
from .common import ShapeError
from .common import Unsupported

from .logger import get_logger


logger = get_logger(__name__)


__all__ = [
    "Tensor", "backward", "grad_check", "constant", "as_tensor", "PSSILU_A_MAX",
    "add", "sub", "neg", "mul", "tensor_sum", "mean", "square", "reshape",
    "conv2d", "conv2d_reference", "pad2d", "maxpool2d", "global_avg_pool",
    "batchnorm", "activation", "sigmoid", "relu", "se_gate", "linear",
    "softmax", "log_softmax", "cross_entropy", "kl_divergence",
]


GELU_C = math.sqrt(2.0 / math.pi)
GELU_K = 0.044715

PSSILU_A_MAX = 0.99




class Tensor:

    def __init__(self, values, requires_grad=False, parents=(), backward_fn=None, op="leaf"):

        self.values = np.asarray(values, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = np.zeros_like(self.values) if self.requires_grad else None
        self.parents = tuple(parents)
        self.backward_fn = backward_fn
        self.op = op
        self.consumed = False


    @property
    def shape(self):
        return self.values.shape


    @property
    def ndim(self):
        return self.values.ndim


    @property
    def is_leaf(self):
        return self.backward_fn is None


    def item(self):
        return float(self.values.reshape(-1)[0])


    def zero_grad(self):
        if self.requires_grad:
            self.grad = np.zeros_like(self.values)


    def detach(self):
        return Tensor(self.values.copy())


    def __repr__(self):
        return f"Tensor(op={self.op}, shape={self.shape}, requires_grad={self.requires_grad})"


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


    def __neg__(self):
        return neg(self)




def constant(values):
    return Tensor(values)


def as_tensor(value):
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _node(values, parents, backward_fn, op):
    # Only keep the graph when something upstream needs gradients
    if any(p.requires_grad for p in parents):
        return Tensor(values, requires_grad=True, parents=parents, backward_fn=backward_fn, op=op)
    return Tensor(values, op=op)


def _unbroadcast(grad, shape):

    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)

    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)

    return grad




def _topological_order(root):

    order = []
    visited = set()
    stack = [(root, False)]

    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))

    return order


def backward(loss):
    """Fill the grad of every tensor that requires gradients under loss.

    loss must hold exactly one value. Leaf gradients accumulate, so callers
    reset them between steps.
    """

    if loss.values.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")

    if not loss.requires_grad:
        logger.debug("Loss does not depend on any tensor requiring gradients")
        return

    order = _topological_order(loss)

    if loss.consumed or any(node.consumed for node in order if not node.is_leaf):
        raise Unsupported("Graph already differentiated, double backward is not supported")

    loss.grad = loss.grad + 1.0

    for node in reversed(order):
        if node.is_leaf:
            continue
        grads = node.backward_fn(node.grad)
        for parent, grad in zip(node.parents, grads):
            if grad is None or not parent.requires_grad:
                continue
            parent.grad = parent.grad + grad
        node.consumed = True

    loss.consumed = True




def add(a, b):

    a = as_tensor(a)
    b = as_tensor(b)

    def backward_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _node(a.values + b.values, (a, b), backward_fn, "add")


def sub(a, b):

    a = as_tensor(a)
    b = as_tensor(b)

    def backward_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _node(a.values - b.values, (a, b), backward_fn, "sub")


def neg(a):

    def backward_fn(g):
        return (-g,)

    return _node(-a.values, (a,), backward_fn, "neg")


def mul(a, b):

    a = as_tensor(a)
    b = as_tensor(b)

    def backward_fn(g):
        return _unbroadcast(g * b.values, a.shape), _unbroadcast(g * a.values, b.shape)

    return _node(a.values * b.values, (a, b), backward_fn, "mul")


def tensor_sum(a, axis=None):

    def backward_fn(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.shape).copy(),)

    return _node(a.values.sum(axis=axis), (a,), backward_fn, "sum")


def mean(a, axis=None):

    count = a.values.size if axis is None else a.shape[axis]

    def backward_fn(g):
        if axis is None:
            return (np.broadcast_to(g / count, a.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g / count, axis), a.shape).copy(),)

    return _node(a.values.mean(axis=axis), (a,), backward_fn, "mean")


def square(a):

    def backward_fn(g):
        return (2.0 * g * a.values,)

    return _node(a.values * a.values, (a,), backward_fn, "square")


def reshape(a, shape):

    def backward_fn(g):
        return (g.reshape(a.shape),)

    return _node(a.values.reshape(shape), (a,), backward_fn, "reshape")


def linear(x, weight, bias=None):
    """x: N x in, weight: out x in, bias: out."""

    if x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[1]:
        raise ShapeError(f"linear: input {x.shape} does not match weight {weight.shape}")

    if bias is not None and bias.shape != (weight.shape[0],):
        raise ShapeError(f"linear: bias {bias.shape} does not match weight {weight.shape}")

    out = x.values @ weight.values.T
    if bias is not None:
        out = out + bias.values

    def backward_fn(g):
        grads = [g @ weight.values, g.T @ x.values]
        if bias is not None:
            grads.append(g.sum(axis=0))
        return grads

    parents = (x, weight) if bias is None else (x, weight, bias)
    return _node(out, parents, backward_fn, "linear")




def _output_size(size, kernel, stride, padding):
    return (size + 2 * padding - kernel) // stride + 1


def _im2col(x, kh, kw, stride, padding):

    n, c, h, w = x.shape
    oh = _output_size(h, kh, stride, padding)
    ow = _output_size(w, kw, stride, padding)

    img = np.pad(x, [(0, 0), (0, 0), (padding, padding), (padding, padding)], 'constant')
    col = np.zeros((n, c, kh, kw, oh, ow))
    for y in range(kh):
        y_max = y + stride * oh
        for xx in range(kw):
            x_max = xx + stride * ow
            col[:, :, y, xx, :, :] = img[:, :, y:y_max:stride, xx:x_max:stride]

    # (N, oh, ow, C, kh, kw) flattened to one row per output position
    return col.transpose(0, 4, 5, 1, 2, 3).reshape(n * oh * ow, -1)


def _col2im(col, shape, kh, kw, stride, padding):

    n, c, h, w = shape
    oh = _output_size(h, kh, stride, padding)
    ow = _output_size(w, kw, stride, padding)

    col = col.reshape(n, oh, ow, c, kh, kw).transpose(0, 3, 4, 5, 1, 2)
    img = np.zeros((n, c, h + 2 * padding + stride - 1, w + 2 * padding + stride - 1))
    for y in range(kh):
        y_max = y + stride * oh
        for xx in range(kw):
            x_max = xx + stride * ow
            # Overlapping windows add up
            img[:, :, y:y_max:stride, xx:x_max:stride] += col[:, :, y, xx, :, :]

    return img[:, :, padding:padding + h, padding:padding + w]


def conv2d(x, weight, stride=1, padding=0, bias=None):
    """Cross-correlation of x (N x C x H x W) with weight (O x C x k x k)."""

    if x.ndim != 4 or weight.ndim != 4:
        raise ShapeError(f"conv2d needs 4-d input and kernel, got {x.shape} and {weight.shape}")

    n, c, h, w = x.shape
    o, kc, kh, kw = weight.shape

    if c != kc:
        raise ShapeError(f"conv2d: input has {c} channels, kernel expects {kc}")

    if stride < 1 or padding < 0:
        raise ShapeError(f"conv2d: invalid stride {stride} or padding {padding}")

    oh = _output_size(h, kh, stride, padding)
    ow = _output_size(w, kw, stride, padding)
    if oh < 1 or ow < 1:
        raise ShapeError(f"conv2d: kernel {kh}x{kw} does not fit input {h}x{w}")

    if bias is not None and bias.shape != (o,):
        raise ShapeError(f"conv2d: bias {bias.shape} does not match {o} output channels")

    cols = _im2col(x.values, kh, kw, stride, padding)
    wmat = weight.values.reshape(o, -1)
    out = (cols @ wmat.T).reshape(n, oh, ow, o).transpose(0, 3, 1, 2)
    if bias is not None:
        out = out + bias.values.reshape(1, o, 1, 1)

    def backward_fn(g):
        gmat = g.transpose(0, 2, 3, 1).reshape(-1, o)
        grads = [None, (gmat.T @ cols).reshape(weight.shape)]
        if x.requires_grad:
            grads[0] = _col2im(gmat @ wmat, x.shape, kh, kw, stride, padding)
        if bias is not None:
            grads.append(g.sum(axis=(0, 2, 3)))
        return grads

    parents = (x, weight) if bias is None else (x, weight, bias)
    return _node(np.ascontiguousarray(out), parents, backward_fn, "conv2d")


def conv2d_reference(x, weight, stride=1, padding=0):
    """Naive nested-loop cross-correlation on plain arrays, used as oracle."""

    x = np.asarray(x, dtype=np.float64)
    weight = np.asarray(weight, dtype=np.float64)

    n, c, h, w = x.shape
    o, _, kh, kw = weight.shape
    oh = _output_size(h, kh, stride, padding)
    ow = _output_size(w, kw, stride, padding)

    xp = np.pad(x, [(0, 0), (0, 0), (padding, padding), (padding, padding)], 'constant')
    out = np.zeros((n, o, oh, ow))
    for b in range(n):
        for f in range(o):
            for i in range(oh):
                for j in range(ow):
                    acc = 0.0
                    for ch in range(c):
                        for u in range(kh):
                            for v in range(kw):
                                acc += xp[b, ch, i * stride + u, j * stride + v] * weight[f, ch, u, v]
                    out[b, f, i, j] = acc

    return out


def pad2d(x, top, bottom, left, right):

    if x.ndim != 4:
        raise ShapeError(f"pad2d needs a 4-d input, got {x.shape}")

    h, w = x.shape[2], x.shape[3]
    out = np.pad(x.values, [(0, 0), (0, 0), (top, bottom), (left, right)], 'constant')

    def backward_fn(g):
        return (g[:, :, top:top + h, left:left + w],)

    return _node(out, (x,), backward_fn, "pad2d")


def maxpool2d(x, kernel, stride, padding=0):
    """Max pooling; ties route the gradient to the first index of the window."""

    if x.ndim != 4:
        raise ShapeError(f"maxpool2d needs a 4-d input, got {x.shape}")

    n, c, h, w = x.shape
    oh = _output_size(h, kernel, stride, padding)
    ow = _output_size(w, kernel, stride, padding)
    if oh < 1 or ow < 1:
        raise ShapeError(f"maxpool2d: window {kernel} does not fit input {h}x{w}")

    xp = np.pad(x.values, [(0, 0), (0, 0), (padding, padding), (padding, padding)],
                'constant', constant_values=-np.inf)
    offsets = [(y, xx) for y in range(kernel) for xx in range(kernel)]
    windows = np.stack([xp[:, :, y:y + stride * oh:stride, xx:xx + stride * ow:stride]
                        for y, xx in offsets], axis=-1)
    index = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, index[..., None], axis=-1)[..., 0]

    def backward_fn(g):
        gp = np.zeros(xp.shape)
        for k, (y, xx) in enumerate(offsets):
            gp[:, :, y:y + stride * oh:stride, xx:xx + stride * ow:stride] += g * (index == k)
        return (gp[:, :, padding:padding + h, padding:padding + w],)

    return _node(out, (x,), backward_fn, "maxpool2d")


def global_avg_pool(x):

    if x.ndim != 4:
        raise ShapeError(f"global_avg_pool needs a 4-d input, got {x.shape}")

    n, c, h, w = x.shape

    def backward_fn(g):
        return (np.broadcast_to(g[:, :, None, None] / (h * w), x.shape).copy(),)

    return _node(x.values.mean(axis=(2, 3)), (x,), backward_fn, "global_avg_pool")




def batchnorm(x, gamma, beta, running_mean, running_var, training, momentum=0.1, eps=1e-5):
    """Per-channel normalization of an N x C x H x W (or N x C) input.

    In training mode the batch statistics are used and running_mean and
    running_var (numpy arrays) are updated in place, the variance with the
    unbiased estimate. In eval mode the running statistics are used.
    """

    if x.ndim not in (2, 4):
        raise ShapeError(f"batchnorm needs a 2-d or 4-d input, got {x.shape}")

    channels = x.shape[1]
    if gamma.shape != (channels,) or beta.shape != (channels,):
        raise ShapeError(f"batchnorm: affine shapes {gamma.shape}/{beta.shape} do not match {channels} channels")

    if eps <= 0:
        raise ShapeError("batchnorm: eps must be positive")

    axes = (0,) if x.ndim == 2 else (0, 2, 3)
    view = (1, channels) if x.ndim == 2 else (1, channels, 1, 1)
    count = x.values.size // channels if channels else 0

    if count == 0:
        raise ShapeError("batchnorm: empty batch")

    if training:
        mu = x.values.mean(axis=axes)
        var = x.values.var(axis=axes)
        unbiased = var * count / (count - 1) if count > 1 else var
        running_mean *= (1.0 - momentum)
        running_mean += momentum * mu
        running_var *= (1.0 - momentum)
        running_var += momentum * unbiased
    else:
        mu = running_mean
        var = running_var

    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.values - mu.reshape(view)) * inv_std.reshape(view)
    out = xhat * gamma.values.reshape(view) + beta.values.reshape(view)

    def backward_fn(g):
        dgamma = (g * xhat).sum(axis=axes)
        dbeta = g.sum(axis=axes)
        dxhat = g * gamma.values.reshape(view)
        if training:
            dx = (inv_std.reshape(view) / count) * (
                count * dxhat
                - dxhat.sum(axis=axes).reshape(view)
                - xhat * (dxhat * xhat).sum(axis=axes).reshape(view))
        else:
            dx = dxhat * inv_std.reshape(view)
        return dx, dgamma, dbeta

    return _node(out, (x, gamma, beta), backward_fn, "batchnorm")




def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def sigmoid(x):

    s = _sigmoid(x.values)

    def backward_fn(g):
        return (g * s * (1.0 - s),)

    return _node(s, (x,), backward_fn, "sigmoid")


def relu(x):

    mask = x.values > 0

    def backward_fn(g):
        return (g * mask,)

    return _node(x.values * mask, (x,), backward_fn, "relu")


def _gelu(x):

    v = x.values
    t = np.tanh(GELU_C * (v + GELU_K * v ** 3))
    out = 0.5 * v * (1.0 + t)

    def backward_fn(g):
        dt = (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_K * v * v)
        return (g * (0.5 * (1.0 + t) + 0.5 * v * dt),)

    return _node(out, (x,), backward_fn, "gelu")


def _silu(x):

    v = x.values
    s = _sigmoid(v)

    def backward_fn(g):
        return (g * (s + v * s * (1.0 - s)),)

    return _node(v * s, (x,), backward_fn, "silu")


def _prelu(x, a):

    v = x.values
    neg_part = np.minimum(v, 0.0)
    out = np.maximum(v, 0.0) + a.values * neg_part

    def backward_fn(g):
        dx = g * np.where(v > 0, 1.0, a.values)
        da = np.array([(g * neg_part).sum()]).reshape(a.shape)
        return dx, da

    return _node(out, (x, a), backward_fn, "prelu")


def _psilu(x, beta):

    v = x.values
    b = beta.values
    s = _sigmoid(b * v)

    def backward_fn(g):
        ds = s * (1.0 - s)
        dx = g * (s + b * v * ds)
        dbeta = np.array([(g * v * v * ds).sum()]).reshape(beta.shape)
        return dx, dbeta

    return _node(v * s, (x, beta), backward_fn, "psilu")


def _pssilu(x, beta, a):

    v = x.values
    b = beta.values
    raw = a.values
    ac = np.clip(raw, 0.0, PSSILU_A_MAX)
    s = _sigmoid(b * v)
    scale = 1.0 / (1.0 - ac)
    out = v * (s - ac) * scale

    def backward_fn(g):
        ds = s * (1.0 - s)
        dx = g * (s - ac + b * v * ds) * scale
        dbeta = np.array([(g * v * v * ds).sum() * scale.reshape(-1)[0]]).reshape(beta.shape)
        inside = (raw >= 0.0) & (raw <= PSSILU_A_MAX)
        da = (g * v * (s - 1.0)).sum() * scale * scale * inside
        return dx, dbeta, np.asarray(da).reshape(a.shape)

    return _node(out, (x, beta, a), backward_fn, "pssilu")


def activation(kind, x, params=None):
    """Apply an activation of the given ActivationKind.

    params maps parameter names to scalar tensors: "a" for PReLU, "beta" for
    PSiLU, "beta" and "a" for PSSiLU.
    """

    params = params or {}

    def require(name):
        if name not in params or params[name] is None:
            raise ParamError(f"{kind.value} needs parameter '{name}'")
        return params[name]

    if kind == ActivationKind.RELU:
        return relu(x)
    if kind == ActivationKind.GELU:
        return _gelu(x)
    if kind == ActivationKind.SILU:
        return _silu(x)
    if kind == ActivationKind.PRELU:
        return _prelu(x, require("a"))
    if kind == ActivationKind.PSILU:
        return _psilu(x, require("beta"))
    if kind == ActivationKind.PSSILU:
        return _pssilu(x, require("beta"), require("a"))

    raise ParamError(f"Unknown activation kind {kind}")




def se_gate(x, w1, w2, r, b1=None, b2=None):
    """Squeeze-and-excitation gate built from primitive ops.

    Global average pool, FC down to ceil(C/r), ReLU, FC back to C, sigmoid,
    then a per-channel product with x.
    """

    if x.ndim != 4:
        raise ShapeError(f"se_gate needs a 4-d input, got {x.shape}")

    n, c = x.shape[0], x.shape[1]
    hidden = math.ceil(c / r)

    if w1.shape != (hidden, c) or w2.shape != (c, hidden):
        raise ShapeError(f"se_gate: weights {w1.shape}/{w2.shape} do not match C={c}, r={r}")

    squeezed = global_avg_pool(x)
    h = relu(linear(squeezed, w1, b1))
    gate = sigmoid(linear(h, w2, b2))

    return mul(x, reshape(gate, (n, c, 1, 1)))




def log_softmax(z):
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax(z):
    return np.exp(log_softmax(z))


def cross_entropy(logits, labels, reduction="mean"):
    """Softmax cross-entropy of N x K logits against integer labels."""

    labels = np.asarray(labels, dtype=np.int64)

    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError(f"cross_entropy: logits {logits.shape} do not match labels {labels.shape}")

    n, k = logits.shape
    if n == 0:
        raise ShapeError("cross_entropy: empty batch")

    if labels.min() < 0 or labels.max() >= k:
        raise ShapeError(f"cross_entropy: labels outside [0, {k})")

    logp = log_softmax(logits.values)
    rows = np.arange(n)
    losses = -logp[rows, labels]

    if reduction == "none":
        out = losses
    elif reduction == "sum":
        out = losses.sum()
    elif reduction == "mean":
        out = losses.mean()
    else:
        raise ValueError(f"Unknown reduction {reduction}")

    def backward_fn(g):
        probs = np.exp(logp)
        probs[rows, labels] -= 1.0
        if reduction == "none":
            return (probs * g[:, None],)
        if reduction == "mean":
            return (probs * (g / n),)
        return (probs * g,)

    return _node(out, (logits,), backward_fn, "cross_entropy")


def kl_divergence(p_logits, q_logits, reduction="batchmean"):
    """KL(softmax(p_logits) || softmax(q_logits)), summed over classes."""

    if p_logits.shape != q_logits.shape or p_logits.ndim != 2:
        raise ShapeError(f"kl_divergence: shapes {p_logits.shape} and {q_logits.shape} differ")

    n = p_logits.shape[0]
    lp = log_softmax(p_logits.values)
    lq = log_softmax(q_logits.values)
    p = np.exp(lp)
    q = np.exp(lq)
    rows = (p * (lp - lq)).sum(axis=1)

    if reduction == "none":
        out = rows
    elif reduction == "sum":
        out = rows.sum()
    elif reduction == "batchmean":
        out = rows.mean()
    else:
        raise ValueError(f"Unknown reduction {reduction}")

    def backward_fn(g):
        if reduction == "none":
            scale = g[:, None]
        elif reduction == "batchmean":
            scale = g / n
        else:
            scale = g
        dp = p * (lp - lq - rows[:, None]) * scale
        dq = (q - p) * scale
        return dp, dq

    return _node(out, (p_logits, q_logits), backward_fn, "kl_divergence")




def grad_check(f, x, h=1e-5, coords=None):
    """Compare backward() gradients of f at x against central differences.

    f maps a Tensor to a scalar Tensor. Returns the maximum over the checked
    coordinates of |a - n| / max(|a|, |n|, 1e-8). coords restricts the check
    to the given flat indices, e.g. to keep away from ReLU kinks.
    """

    x = np.array(x, dtype=np.float64)

    xt = Tensor(x.copy(), requires_grad=True)
    loss = f(xt)
    backward(loss)
    analytic = xt.grad.reshape(-1)

    if coords is None:
        coords = range(x.size)

    worst = 0.0
    for i in coords:
        plus = x.copy().reshape(-1)
        minus = x.copy().reshape(-1)
        plus[i] += h
        minus[i] -= h
        fp = f(Tensor(plus.reshape(x.shape))).item()
        fm = f(Tensor(minus.reshape(x.shape))).item()
        numeric = (fp - fm) / (2.0 * h)
        a = analytic[i]
        err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
        worst = max(worst, err)

    return worst
