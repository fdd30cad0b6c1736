"""Minimal reverse-mode autodiff over numpy arrays.

Covers exactly the operator set the policy networks need: broadcast
arithmetic, matmul, the usual nonlinearities, reductions, slicing and
concatenation. Gradients accumulate into .grad after backward().
"""

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, parents=(), backward=None):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def T(self):
        out = Tensor(self.data.T, self.requires_grad, (self,))
        out._backward = lambda g: (g.T,)
        return out

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={'set' if self.grad is not None else 'none'})"

    # -- graph construction ------------------------------------------------

    @staticmethod
    def _lift(x):
        return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=float))

    def _unary(self, data, bwd):
        out = Tensor(data, self.requires_grad, (self,))
        out._backward = bwd
        return out

    def __add__(self, other):
        if np.isscalar(other):
            return self._unary(self.data + other, lambda g: (g,))
        other = self._lift(other)
        out = Tensor(self.data + other.data, self.requires_grad or other.requires_grad, (self, other))
        out._backward = lambda g: (_unbroadcast(g, self.data.shape), _unbroadcast(g, other.data.shape))
        return out

    __radd__ = __add__

    def __neg__(self):
        return self._unary(-self.data, lambda g: (-g,))

    def __sub__(self, other):
        if np.isscalar(other):
            return self._unary(self.data - other, lambda g: (g,))
        return self + (-self._lift(other))

    def __rsub__(self, other):
        if np.isscalar(other):
            return self._unary(other - self.data, lambda g: (-g,))
        return self._lift(other) + (-self)

    def __mul__(self, other):
        if np.isscalar(other):
            return self._unary(self.data * other, lambda g: (g * other,))
        other = self._lift(other)
        out = Tensor(self.data * other.data, self.requires_grad or other.requires_grad, (self, other))
        out._backward = lambda g: (
            _unbroadcast(g * other.data, self.data.shape),
            _unbroadcast(g * self.data, other.data.shape),
        )
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        if np.isscalar(other):
            return self * (1.0 / other)
        other = self._lift(other)
        out = Tensor(self.data / other.data, self.requires_grad or other.requires_grad, (self, other))
        out._backward = lambda g: (
            _unbroadcast(g / other.data, self.data.shape),
            _unbroadcast(-g * self.data / (other.data * other.data), other.data.shape),
        )
        return out

    def __rtruediv__(self, other):
        if np.isscalar(other):
            out = Tensor(other / self.data, self.requires_grad, (self,))
            out._backward = lambda g: (-g * other / (self.data * self.data),)
            return out
        return self._lift(other) / self

    def __pow__(self, exponent):
        assert np.isscalar(exponent)
        out = Tensor(self.data ** exponent, self.requires_grad, (self,))
        out._backward = lambda g: (g * exponent * self.data ** (exponent - 1),)
        return out

    def __matmul__(self, other):
        other = self._lift(other)
        out = Tensor(self.data @ other.data, self.requires_grad or other.requires_grad, (self, other))
        out._backward = lambda g: (g @ other.data.T, self.data.T @ g)
        return out

    def __getitem__(self, key):
        out = Tensor(self.data[key], self.requires_grad, (self,))

        def bwd(g):
            full = np.zeros_like(self.data)
            full[key] = g
            return (full,)

        out._backward = bwd
        return out

    # -- elementwise -------------------------------------------------------

    def exp(self):
        data = np.exp(self.data)
        return self._unary(data, lambda g: (g * data,))

    def log(self):
        return self._unary(np.log(self.data), lambda g: (g / self.data,))

    def sqrt(self):
        data = np.sqrt(self.data)
        return self._unary(data, lambda g: (g * 0.5 / data,))

    def tanh(self):
        data = np.tanh(self.data)
        return self._unary(data, lambda g: (g * (1.0 - data * data),))

    def sigmoid(self):
        data = 1.0 / (1.0 + np.exp(-self.data))
        return self._unary(data, lambda g: (g * data * (1.0 - data),))

    def abs(self):
        sign = np.sign(self.data)
        return self._unary(np.abs(self.data), lambda g: (g * sign,))

    def clip(self, lo, hi):
        mask = ((self.data >= lo) & (self.data <= hi)).astype(self.data.dtype)
        return self._unary(np.clip(self.data, lo, hi), lambda g: (g * mask,))

    def maximum(self, other):
        if np.isscalar(other):
            mask = (self.data >= other).astype(self.data.dtype)
            return self._unary(np.maximum(self.data, other), lambda g: (g * mask,))
        other = self._lift(other)
        mask = (self.data >= other.data).astype(self.data.dtype)
        out = Tensor(np.maximum(self.data, other.data),
                     self.requires_grad or other.requires_grad, (self, other))
        out._backward = lambda g: (
            _unbroadcast(g * mask, self.data.shape),
            _unbroadcast(g * (1.0 - mask), other.data.shape),
        )
        return out

    def minimum(self, other):
        if np.isscalar(other):
            mask = (self.data <= other).astype(self.data.dtype)
            return self._unary(np.minimum(self.data, other), lambda g: (g * mask,))
        other = self._lift(other)
        mask = (self.data <= other.data).astype(self.data.dtype)
        out = Tensor(np.minimum(self.data, other.data),
                     self.requires_grad or other.requires_grad, (self, other))
        out._backward = lambda g: (
            _unbroadcast(g * mask, self.data.shape),
            _unbroadcast(g * (1.0 - mask), other.data.shape),
        )
        return out

    # -- reductions ----------------------------------------------------------

    def sum(self, axis=None, keepdims=False):
        out = Tensor(self.data.sum(axis=axis, keepdims=keepdims), self.requires_grad, (self,))

        def bwd(g):
            g = np.asarray(g)
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, self.data.shape).copy(),)

        out._backward = bwd
        return out

    def mean(self, axis=None, keepdims=False):
        count = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def item(self) -> float:
        return float(self.data)

    # -- backward ------------------------------------------------------------

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward() needs a scalar loss")
        order, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is None or node.grad is None:
                continue
            for parent, grad in zip(node._parents, node._backward(node.grad)):
                if grad is None:
                    continue
                if parent.grad is None:
                    parent.grad = np.zeros_like(parent.data)
                parent.grad += grad


def concat(tensors, axis=0):
    tensors = [Tensor._lift(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    out = Tensor(data, any(t.requires_grad for t in tensors), tuple(tensors))
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def bwd(g):
        return tuple(np.split(g, splits, axis=axis))

    out._backward = bwd
    return out


def relu(x: Tensor) -> Tensor:
    return x.maximum(0.0)


def elu(x: Tensor) -> Tensor:
    """elu(x) = x for x > 0, exp(x) - 1 otherwise (alpha = 1). Fused node."""
    pos = x.data > 0
    data = np.where(pos, x.data, np.exp(np.minimum(x.data, 0.0)) - 1.0)
    out = Tensor(data, x.requires_grad, (x,))
    out._backward = lambda g: (g * np.where(pos, 1.0, data + 1.0),)
    return out


def lstm_cell_fused(x: Tensor, h: Tensor, c: Tensor, w_x: Tensor, w_h: Tensor,
                    b: Tensor, hidden_dim: int):
    """One LSTM cell step as a single graph node.

    Returns (h', c') as slices of a fused (N, 2H) node so the analytic cell
    backward runs once instead of through ~15 elementwise nodes.
    """
    hd = hidden_dim
    z = x.data @ w_x.data + h.data @ w_h.data + b.data
    i = 1.0 / (1.0 + np.exp(-z[:, :hd]))
    f = 1.0 / (1.0 + np.exp(-z[:, hd:2 * hd]))
    g = np.tanh(z[:, 2 * hd:3 * hd])
    o = 1.0 / (1.0 + np.exp(-z[:, 3 * hd:]))
    c_new = f * c.data + i * g
    tc = np.tanh(c_new)
    h_new = o * tc

    out = Tensor(np.concatenate([h_new, c_new], axis=1), True, (x, h, c, w_x, w_h, b))

    def bwd(grad):
        dh, dc_ext = grad[:, :hd], grad[:, hd:]
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_ext
        dz = np.concatenate([
            dc * g * i * (1.0 - i),
            dc * c.data * f * (1.0 - f),
            dc * i * (1.0 - g * g),
            do * o * (1.0 - o),
        ], axis=1)
        return (
            dz @ w_x.data.T,
            dz @ w_h.data.T,
            dc * f,
            x.data.T @ dz,
            h.data.T @ dz,
            dz.sum(axis=0),
        )

    out._backward = bwd
    return out[:, :hd], out[:, hd:]


def elu_prime(x: Tensor) -> Tensor:
    """Derivative of elu as a graph of x, so it can itself be differentiated."""
    mask = (x.data > 0).astype(x.data.dtype)
    return Tensor(mask) + x.minimum(0.0).exp() * (1.0 - mask)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean cross-entropy of (N, K) logits against integer labels."""
    labels = np.asarray(labels, dtype=int)
    n = logits.data.shape[0]
    probs = softmax(logits.data)
    loss_val = -np.log(probs[np.arange(n), labels] + 1e-12).mean()
    out = Tensor(np.asarray(loss_val), logits.requires_grad, (logits,))

    def bwd(g):
        grad = probs.copy()
        grad[np.arange(n), labels] -= 1.0
        return (g * grad / n,)

    out._backward = bwd
    return out


def mse(pred: Tensor, target: np.ndarray) -> Tensor:
    diff = pred - Tensor(np.asarray(target))
    return (diff * diff).mean()
