"""Parameterized layers: linear, MLP, stacked LSTM.

Every layer offers a graph path (Tensor in/out, used by updates) and a plain
numpy path (used by rollouts); both share the same parameter arrays.
"""

import numpy as np

from .tensor import Tensor, concat, elu, lstm_cell_fused, relu


def uniform_init(rng: np.random.Generator, shape, dtype):
    bound = 1.0 / np.sqrt(shape[0])
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def orthogonal_init(rng: np.random.Generator, shape, dtype, gain=1.0):
    a = rng.standard_normal(shape)
    q, r = np.linalg.qr(a if shape[0] >= shape[1] else a.T)
    q = q * np.sign(np.diag(r))
    if shape[0] < shape[1]:
        q = q.T
    return (gain * q[: shape[0], : shape[1]]).astype(dtype)


class Module:
    def parameters(self):
        """Flat list of (name, Tensor) pairs, prefix-qualified."""
        out = []
        for attr, value in vars(self).items():
            if isinstance(value, Tensor) and value.requires_grad:
                out.append((attr, value))
            elif isinstance(value, Module):
                out.extend((f"{attr}.{n}", p) for n, p in value.parameters())
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        out.extend((f"{attr}.{i}.{n}", p) for n, p in item.parameters())
        return out

    def zero_grad(self):
        for _, p in self.parameters():
            p.grad = None


_ACTIVATIONS = {"elu": elu, "relu": relu, "tanh": lambda x: x.tanh()}


def _act_np(name, x):
    if name == "elu":
        return np.where(x > 0, x, np.exp(np.minimum(x, 0.0)) - 1.0)
    if name == "relu":
        return np.maximum(x, 0.0)
    return np.tanh(x)


class Linear(Module):
    def __init__(self, in_dim, out_dim, rng, dtype=np.float32):
        self.w = Tensor(uniform_init(rng, (in_dim, out_dim), dtype), requires_grad=True)
        self.b = Tensor(np.zeros(out_dim, dtype=dtype), requires_grad=True)

    def forward(self, x: Tensor) -> Tensor:
        return x @ self.w + self.b

    def forward_np(self, x: np.ndarray) -> np.ndarray:
        return x @ self.w.data + self.b.data


class MLP(Module):
    """Feed-forward net; hidden layers use `activation`, output is linear."""

    def __init__(self, in_dim, hidden, out_dim, rng, activation="elu", dtype=np.float32):
        dims = [in_dim] + list(hidden) + [out_dim]
        self.layers = [Linear(dims[i], dims[i + 1], rng, dtype) for i in range(len(dims) - 1)]
        self.activation = activation

    def forward(self, x: Tensor) -> Tensor:
        act = _ACTIVATIONS[self.activation]
        for layer in self.layers[:-1]:
            x = act(layer.forward(x))
        return self.layers[-1].forward(x)

    def forward_np(self, x: np.ndarray) -> np.ndarray:
        for layer in self.layers[:-1]:
            x = _act_np(self.activation, layer.forward_np(x))
        return self.layers[-1].forward_np(x)

    def forward_with_preacts(self, x: Tensor):
        """Graph forward that also returns pre-activation tensors per hidden
        layer, for building input-gradient graphs."""
        act = _ACTIVATIONS[self.activation]
        preacts = []
        for layer in self.layers[:-1]:
            z = layer.forward(x)
            preacts.append(z)
            x = act(z)
        return self.layers[-1].forward(x), preacts


class LSTMCell(Module):
    """Standard LSTM cell; gates ordered (input, forget, cell, output)."""

    def __init__(self, in_dim, hidden_dim, rng, dtype=np.float32):
        self.hidden_dim = hidden_dim
        self.w_x = Tensor(uniform_init(rng, (in_dim, 4 * hidden_dim), dtype), requires_grad=True)
        wh = np.concatenate(
            [orthogonal_init(rng, (hidden_dim, hidden_dim), dtype) for _ in range(4)], axis=1)
        self.w_h = Tensor(wh, requires_grad=True)
        bias = np.zeros(4 * hidden_dim, dtype=dtype)
        bias[hidden_dim: 2 * hidden_dim] = 1.0     # forget-gate bias
        self.b = Tensor(bias, requires_grad=True)

    def step(self, x: Tensor, h: Tensor, c: Tensor):
        return lstm_cell_fused(x, h, c, self.w_x, self.w_h, self.b, self.hidden_dim)

    def step_np(self, x: np.ndarray, h: np.ndarray, c: np.ndarray):
        hd = self.hidden_dim
        z = x @ self.w_x.data + h @ self.w_h.data + self.b.data
        zi, zf, zg, zo = z[:, :hd], z[:, hd:2 * hd], z[:, 2 * hd:3 * hd], z[:, 3 * hd:]
        i = 1.0 / (1.0 + np.exp(-zi))
        f = 1.0 / (1.0 + np.exp(-zf))
        g = np.tanh(zg)
        o = 1.0 / (1.0 + np.exp(-zo))
        c_new = f * c + i * g
        h_new = o * np.tanh(c_new)
        return h_new, c_new


class LSTM(Module):
    """Stack of LSTM cells; output is the top layer's hidden state."""

    def __init__(self, in_dim, hidden_sizes, rng, dtype=np.float32):
        self.cells = []
        self.dtype = dtype
        dim = in_dim
        for hs in hidden_sizes:
            self.cells.append(LSTMCell(dim, hs, rng, dtype))
            dim = hs
        self.out_dim = dim

    def init_hidden(self, batch: int):
        """Per-layer (h, c) numpy arrays, zeros; reset at episode bounds."""
        return [
            (np.zeros((batch, cell.hidden_dim), dtype=self.dtype),
             np.zeros((batch, cell.hidden_dim), dtype=self.dtype))
            for cell in self.cells
        ]

    def step_np(self, x: np.ndarray, hidden):
        new_hidden = []
        for cell, (h, c) in zip(self.cells, hidden):
            h, c = cell.step_np(x, h, c)
            new_hidden.append((h, c))
            x = h
        return x, new_hidden

    def step_graph(self, x: Tensor, hidden):
        """hidden: list of (h, c) Tensors."""
        new_hidden = []
        for cell, (h, c) in zip(self.cells, hidden):
            h, c = cell.step(x, h, c)
            new_hidden.append((h, c))
            x = h
        return x, new_hidden

    def hidden_to_tensors(self, hidden):
        return [(Tensor(h), Tensor(c)) for h, c in hidden]

    @staticmethod
    def mask_hidden(hidden, keep_mask: np.ndarray):
        """Zero (h, c) rows where keep_mask is False (episode boundaries)."""
        m = keep_mask.astype(hidden[0][0].dtype)[:, None]
        return [(h * m, c * m) for h, c in hidden]

    @staticmethod
    def mask_hidden_graph(hidden, keep_mask: np.ndarray):
        m = keep_mask.astype(float)[:, None]
        return [(h * Tensor(m.astype(h.data.dtype)), c * Tensor(m.astype(c.data.dtype)))
                for h, c in hidden]
