"""Fixed-stack neural network engine on float64 numpy arrays.

Every layer exposes ``forward(x, train, rng) -> (y, cache)`` and
``backward(dy, cache) -> (dx, grads)``. A :class:`Network` chains them and
keeps the per-layer caches in a :class:`ForwardCache` so a backward pass can
be replayed against exactly the activations and dropout masks of the forward
pass that produced them.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

DTYPE = np.float64


# ---------------------------------------------------------------------------
# primitive ops
# ---------------------------------------------------------------------------

def conv_out_len(w: int, f: int, p: int, s: int) -> int:
    """Output length of a 1-D convolution: (w + 2p - f) / s + 1."""
    if s < 1:
        raise ValueError("stride must be >= 1")
    span = w + 2 * p - f
    if span < 0:
        raise ValueError(f"filter {f} longer than padded input {w + 2 * p}")
    if span % s:
        raise ValueError(f"(w + 2p - f) = {span} is not divisible by stride {s}")
    return span // s + 1


def same_padding(f: int, s: int = 1) -> int:
    if s != 1 or f % 2 == 0:
        raise ValueError("same padding needs stride 1 and an odd filter size")
    return (f - 1) // 2


def embedding_forward(indices, table):
    indices = np.asarray(indices)
    bad = np.argwhere((indices < 0) | (indices >= table.shape[0]))
    if bad.size:
        pos = tuple(int(i) for i in bad[0])
        raise IndexError(
            f"index {int(indices[pos])} at position {pos} outside vocabulary of size {table.shape[0]}"
        )
    return table[indices]


def embedding_backward(indices, dy, vocab_size):
    flat = np.asarray(indices).reshape(-1)
    onehot = np.zeros((vocab_size, flat.size), dtype=DTYPE)
    onehot[flat, np.arange(flat.size)] = 1.0
    return onehot @ dy.reshape(-1, dy.shape[-1])


def _windows(x, f, p, s):
    """Gather sliding windows: (B, L, C) -> (B, L_out, f, C)."""
    if x.ndim != 3:
        raise ValueError(f"expected (batch, length, channels), got shape {x.shape}")
    xp = np.pad(x, ((0, 0), (p, p), (0, 0)))
    starts = np.arange(0, xp.shape[1] - f + 1, s)
    idx = starts[:, None] + np.arange(f)[None, :]
    return xp[:, idx, :], xp.shape


def conv1d_forward(x, kernels, bias, padding=1, stride=1):
    """1-D convolution over axis 1 with zero padding.

    ``kernels`` has shape (f, C_in, C_out); ``padding`` is an int or "same".
    Output positions are enumerated by sliding the window directly.
    """
    f, c_in, c_out = kernels.shape
    if padding == "same":
        padding = same_padding(f, stride)
    if x.shape[-1] != c_in or bias.shape != (c_out,):
        raise ValueError(f"shape mismatch: x {x.shape}, kernels {kernels.shape}, bias {bias.shape}")
    cols, _ = _windows(x, f, padding, stride)
    B, L_out = cols.shape[:2]
    y = cols.reshape(B * L_out, f * c_in) @ kernels.reshape(f * c_in, c_out) + bias
    return y.reshape(B, L_out, c_out)


def conv1d_backward(x, kernels, dy, padding=1, stride=1):
    f, c_in, c_out = kernels.shape
    if padding == "same":
        padding = same_padding(f, stride)
    cols, padded_shape = _windows(x, f, padding, stride)
    B, L_out = cols.shape[:2]
    dy2 = dy.reshape(B * L_out, c_out)
    dkernels = (cols.reshape(B * L_out, f * c_in).T @ dy2).reshape(f, c_in, c_out)
    dbias = dy2.sum(axis=0)
    dcols = (dy2 @ kernels.reshape(f * c_in, c_out).T).reshape(B, L_out, f, c_in)
    dxp = np.zeros(padded_shape, dtype=DTYPE)
    starts = np.arange(L_out) * stride
    for k in range(f):
        # starts are distinct, so a buffered add is exact
        dxp[:, starts + k] += dcols[:, :, k]
    dx = dxp[:, padding: padded_shape[1] - padding]
    return dx, dkernels, dbias


def relu(x):
    return np.maximum(x, 0.0)


def dropout(x, p, train, rng=None):
    """Inverted dropout. Returns ``(y, mask)`` where mask already holds 1/(1-p)."""
    if not 0 <= p < 1:
        raise ValueError("dropout probability must lie in [0, 1)")
    if not train or p == 0:
        return x, np.ones_like(x)
    keep = rng.random(x.shape) >= p
    mask = keep / (1.0 - p)
    return x * mask, mask


def global_max_pool(x):
    """Max over axis 1; argmax is the first maximizing position."""
    if x.shape[1] < 1:
        raise ValueError("empty sequence")
    arg = np.argmax(x, axis=1)
    return np.take_along_axis(x, arg[:, None, :], axis=1)[:, 0, :], arg


def global_max_pool_backward(dy, arg, length):
    B, C = dy.shape
    dx = np.zeros((B, length, C), dtype=DTYPE)
    np.put_along_axis(dx, arg[:, None, :], dy[:, None, :], axis=1)
    return dx


def dense_forward(x, weights, bias):
    if x.shape[-1] != weights.shape[0] or bias.shape != (weights.shape[1],):
        raise ValueError(f"shape mismatch: x {x.shape}, W {weights.shape}, b {bias.shape}")
    return x @ weights + bias


def sigmoid(x):
    x = np.asarray(x, dtype=DTYPE)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def glorot_limit(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


# ---------------------------------------------------------------------------
# layers
# ---------------------------------------------------------------------------

class Layer:
    kind = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}

    @property
    def n_params(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def output_shape(self, in_shape):
        return in_shape

    def init(self, rng):
        pass

    def config(self) -> dict:
        return {}

    def forward(self, x, train, rng):
        raise NotImplementedError

    def backward(self, dy, cache):
        raise NotImplementedError

    def __repr__(self):
        args = ", ".join(f"{k}={v}" for k, v in self.config().items())
        return f"{type(self).__name__}({args})"


class Embedding(Layer):
    kind = "embedding"

    def __init__(self, vocab_size: int, dim: int, init_scale: float = 0.05):
        super().__init__()
        self.vocab_size, self.dim, self.init_scale = vocab_size, dim, init_scale
        self.params["table"] = np.zeros((vocab_size, dim), dtype=DTYPE)

    def config(self):
        return {"vocab_size": self.vocab_size, "dim": self.dim}

    def init(self, rng):
        self.params["table"] = rng.uniform(-self.init_scale, self.init_scale, (self.vocab_size, self.dim))

    def output_shape(self, in_shape):
        return (*in_shape, self.dim)

    def forward(self, x, train, rng):
        return embedding_forward(x, self.params["table"]), x

    def backward(self, dy, cache):
        return None, {"table": embedding_backward(cache, dy, self.vocab_size)}


class Dropout(Layer):
    kind = "dropout"

    def __init__(self, p: float):
        super().__init__()
        if not 0 <= p < 1:
            raise ValueError("dropout probability must lie in [0, 1)")
        self.p = p

    def config(self):
        return {"p": self.p}

    def forward(self, x, train, rng):
        y, mask = dropout(x, self.p, train, rng)
        return y, mask

    def backward(self, dy, cache):
        return dy * cache, {}


class Conv1D(Layer):
    kind = "conv1d"

    def __init__(self, c_in: int, c_out: int, kernel_size: int = 3, padding="same", stride: int = 1):
        super().__init__()
        self.c_in, self.c_out, self.kernel_size = c_in, c_out, kernel_size
        self.stride = stride
        self.padding = same_padding(kernel_size, stride) if padding == "same" else int(padding)
        self.params["kernels"] = np.zeros((kernel_size, c_in, c_out), dtype=DTYPE)
        self.params["bias"] = np.zeros(c_out, dtype=DTYPE)

    def config(self):
        return {"c_in": self.c_in, "c_out": self.c_out, "kernel_size": self.kernel_size,
                "padding": self.padding, "stride": self.stride}

    def init(self, rng):
        lim = glorot_limit(self.kernel_size * self.c_in, self.kernel_size * self.c_out)
        self.params["kernels"] = rng.uniform(-lim, lim, self.params["kernels"].shape)
        self.params["bias"] = np.zeros(self.c_out, dtype=DTYPE)

    def output_shape(self, in_shape):
        *lead, length, _ = in_shape
        return (*lead, conv_out_len(length, self.kernel_size, self.padding, self.stride), self.c_out)

    def forward(self, x, train, rng):
        y = conv1d_forward(x, self.params["kernels"], self.params["bias"], self.padding, self.stride)
        return y, x

    def backward(self, dy, cache):
        dx, dk, db = conv1d_backward(cache, self.params["kernels"], dy, self.padding, self.stride)
        return dx, {"kernels": dk, "bias": db}


class ReLU(Layer):
    kind = "relu"

    def forward(self, x, train, rng):
        return relu(x), x

    def backward(self, dy, cache):
        return dy * (cache > 0), {}


class GlobalMaxPool(Layer):
    kind = "global_max_pool"

    def output_shape(self, in_shape):
        *lead, _, channels = in_shape
        return (*lead, channels)

    def forward(self, x, train, rng):
        y, arg = global_max_pool(x)
        return y, (arg, x.shape[1])

    def backward(self, dy, cache):
        arg, length = cache
        return global_max_pool_backward(dy, arg, length), {}


class Dense(Layer):
    kind = "dense"

    def __init__(self, n_in: int, n_out: int):
        super().__init__()
        self.n_in, self.n_out = n_in, n_out
        self.params["weights"] = np.zeros((n_in, n_out), dtype=DTYPE)
        self.params["bias"] = np.zeros(n_out, dtype=DTYPE)

    def config(self):
        return {"n_in": self.n_in, "n_out": self.n_out}

    def init(self, rng):
        lim = glorot_limit(self.n_in, self.n_out)
        self.params["weights"] = rng.uniform(-lim, lim, (self.n_in, self.n_out))
        self.params["bias"] = np.zeros(self.n_out, dtype=DTYPE)

    def output_shape(self, in_shape):
        return (*in_shape[:-1], self.n_out)

    def forward(self, x, train, rng):
        return dense_forward(x, self.params["weights"], self.params["bias"]), x

    def backward(self, dy, cache):
        return dy @ self.params["weights"].T, {"weights": cache.T @ dy, "bias": dy.sum(axis=0)}


class Sigmoid(Layer):
    kind = "sigmoid"

    def forward(self, x, train, rng):
        y = sigmoid(x)
        return y, y

    def backward(self, dy, cache):
        return dy * cache * (1.0 - cache), {}


LAYER_TYPES = {cls.kind: cls for cls in (Embedding, Dropout, Conv1D, ReLU, GlobalMaxPool, Dense, Sigmoid)}


def layer_from_config(kind: str, cfg: dict) -> Layer:
    return LAYER_TYPES[kind](**cfg)


# ---------------------------------------------------------------------------
# network
# ---------------------------------------------------------------------------

@dataclass
class ForwardCache:
    train: bool
    inputs: list = field(default_factory=list)
    caches: list = field(default_factory=list)
    masks: dict = field(default_factory=dict)  # layer position -> dropout mask
    output: np.ndarray | None = None


class Network:
    """An ordered stack of layers whose last layer may be a :class:`Sigmoid`."""

    def __init__(self, layers, input_shape):
        self.layers = list(layers)
        self.input_shape = tuple(input_shape)
        self.shapes()  # validates composition

    def shapes(self):
        """Per-sample output shape of every layer."""
        out, shape = [], self.input_shape
        for layer in self.layers:
            shape = layer.output_shape(shape)
            out.append(shape)
        return out

    @property
    def n_params(self) -> int:
        return sum(layer.n_params for layer in self.layers)

    def summary(self):
        return [(type(l).__name__, s, l.n_params) for l, s in zip(self.layers, self.shapes())]

    def parameters(self):
        """Flat list of parameter arrays in fixed layer order."""
        return [p for layer in self.layers for p in layer.params.values()]

    def copy(self) -> "Network":
        return copy.deepcopy(self)

    def forward(self, x, train=False, rng=None):
        cache = ForwardCache(train)
        for i, layer in enumerate(self.layers):
            y, c = layer.forward(x, train, rng)
            if train:
                cache.inputs.append(x)
                cache.caches.append(c)
                if isinstance(layer, Dropout):
                    cache.masks[i] = c
            x = y
        if not np.all(np.isfinite(x)):
            raise FloatingPointError("non-finite network output")
        cache.output = x
        return x, cache

    def backward(self, cache: ForwardCache, grad, wrt="output"):
        """Gradients for every parameter, shaped like :meth:`parameters`.

        ``wrt="logit"`` means ``grad`` is taken with respect to the input of
        the final :class:`Sigmoid`, which is skipped.
        """
        if not cache.train or len(cache.caches) != len(self.layers):
            raise ValueError("cache does not come from a train-mode forward of this network")
        layers = list(zip(self.layers, cache.caches))
        if wrt == "logit":
            if not isinstance(self.layers[-1], Sigmoid):
                raise ValueError("last layer is not a Sigmoid")
            layers = layers[:-1]
        grads_per_layer = [{k: np.zeros_like(v) for k, v in l.params.items()} for l in self.layers]
        dy = grad
        for i in range(len(layers) - 1, -1, -1):
            layer, c = layers[i]
            dy, g = layer.backward(dy, c)
            grads_per_layer[i].update(g)
            if dy is None:
                break
        return [g[k] for layer, g in zip(self.layers, grads_per_layer) for k in layer.params]

    def predict(self, x):
        return self.forward(x, train=False)[0]


def network_forward(net: Network, x, mode="eval", rng=None):
    return net.forward(x, train=(mode == "train"), rng=rng)


def network_backward(net: Network, cache: ForwardCache, grad, wrt="output"):
    return net.backward(cache, grad, wrt)


def init_params(net: Network, seed: int) -> Network:
    """Fresh copy of ``net`` with parameters drawn from one seeded generator."""
    rng = np.random.default_rng(seed)
    net = net.copy()
    for layer in net.layers:
        layer.init(rng)
    return net


def build_cnn(vocab_size: int, seq_len: int = 13, embed_dim: int = 300, filters: int = 64,
              hidden: int = 256, dropout_p: float = 0.3, seed: int | None = None) -> Network:
    """The embedding + two-conv + max-pool + dense classifier."""
    layers = [
        Embedding(vocab_size, embed_dim),
        Dropout(dropout_p),
        Conv1D(embed_dim, filters, 3, "same"),
        ReLU(),
        Dropout(dropout_p),
        Conv1D(filters, filters, 3, "same"),
        ReLU(),
        GlobalMaxPool(),
        Dense(filters, hidden),
        ReLU(),
        Dense(hidden, 1),
        Sigmoid(),
    ]
    net = Network(layers, (seq_len,))
    return net if seed is None else init_params(net, seed)


def build_mlp(n_in: int = 13, hidden: int = 16, seed: int | None = None) -> Network:
    net = Network([Dense(n_in, hidden), ReLU(), Dense(hidden, 1), Sigmoid()], (n_in,))
    return net if seed is None else init_params(net, seed)
