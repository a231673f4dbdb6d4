"""Layers with explicit forward/backward passes.

Every layer operates on arrays whose last axis is the feature axis; any
leading axes (batch, time) are carried through. A layer caches what its
backward pass needs during ``forward`` and consumes the cache in
``backward``, so one instance must not interleave two forward passes.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from ..errors import DimensionError, StateError
from .params import ParameterSet


class Layer:
    name = "layer"

    def forward(self, x: np.ndarray, train: bool = False, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        raise NotImplementedError

    def backward(self, g: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _pop(self, attr: str = "_cache"):
        cache = getattr(self, attr, None)
        if cache is None:
            raise StateError(f"{self.name}: backward called without a recorded forward pass")
        setattr(self, attr, None)
        return cache


class Linear(Layer):
    def __init__(self, params: ParameterSet, name: str, n_in: int, n_out: int,
                 rng: np.random.Generator, gain: float = 1.0):
        self.name = name
        self.n_in = n_in
        self.n_out = n_out
        self.params = params
        # Glorot uniform
        limit = gain * math.sqrt(6.0 / (n_in + n_out))
        params.add(f"{name}.W", rng.uniform(-limit, limit, size=(n_in, n_out)))
        params.add(f"{name}.b", np.zeros(n_out))
        self._cache = None

    @property
    def W(self) -> np.ndarray:
        return self.params.values[f"{self.name}.W"]

    @property
    def b(self) -> np.ndarray:
        return self.params.values[f"{self.name}.b"]

    def forward(self, x, train=False, rng=None):
        if x.shape[-1] != self.n_in:
            raise DimensionError(self.name, self.n_in, x.shape[-1])
        self._cache = x
        return x @ self.W + self.b

    def backward(self, g):
        x = self._pop()
        self.params.grads[f"{self.name}.W"] += x.reshape(-1, self.n_in).T @ g.reshape(-1, self.n_out)
        self.params.grads[f"{self.name}.b"] += g.reshape(-1, self.n_out).sum(axis=0)
        return g @ self.W.T


class Tanh(Layer):
    def __init__(self, name: str = "tanh"):
        self.name = name
        self._cache = None

    def forward(self, x, train=False, rng=None):
        y = np.tanh(x)
        self._cache = y
        return y

    def backward(self, g):
        y = self._pop()
        return g * (1.0 - y * y)


class ReLU(Layer):
    def __init__(self, name: str = "relu"):
        self.name = name
        self._cache = None

    def forward(self, x, train=False, rng=None):
        self._cache = x > 0
        return np.where(self._cache, x, 0.0)

    def backward(self, g):
        return g * self._pop()


class Identity(Layer):
    def __init__(self, name: str = "linear"):
        self.name = name

    def forward(self, x, train=False, rng=None):
        return x

    def backward(self, g):
        return g


ACTIVATIONS = {"tanh": Tanh, "relu": ReLU, "linear": Identity}


def make_activation(kind: str, name: str) -> Layer:
    try:
        return ACTIVATIONS[kind](name)
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}") from None


class Dropout(Layer):
    """Inverted dropout: survivors are scaled by 1/(1-rate) at train time."""

    def __init__(self, rate: float, name: str = "dropout"):
        if not 0.0 <= rate < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")
        self.rate = rate
        self.name = name
        self._cache = None

    def forward(self, x, train=False, rng=None):
        if not train or self.rate == 0.0:
            self._cache = 1.0
            return x
        if rng is None:
            raise ValueError(f"{self.name}: train-mode dropout needs an rng")
        mask = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        self._cache = mask
        return x * mask

    def backward(self, g):
        return g * self._pop()


class LayerNorm(Layer):
    def __init__(self, params: ParameterSet, name: str, dim: int, eps: float = 1e-9):
        self.name = name
        self.dim = dim
        self.eps = eps
        self.params = params
        params.add(f"{name}.gamma", np.ones(dim))
        params.add(f"{name}.beta", np.zeros(dim))
        self._cache = None

    def normalize(self, x: np.ndarray):
        mu = x.mean(axis=-1, keepdims=True)
        var = x.var(axis=-1, keepdims=True)
        inv = 1.0 / np.sqrt(var + self.eps)
        return (x - mu) * inv, inv

    def forward(self, x, train=False, rng=None):
        if x.shape[-1] != self.dim:
            raise DimensionError(self.name, self.dim, x.shape[-1])
        xhat, inv = self.normalize(x)
        self._cache = (xhat, inv)
        return xhat * self.params.values[f"{self.name}.gamma"] + self.params.values[f"{self.name}.beta"]

    def backward(self, g):
        xhat, inv = self._pop()
        d = self.dim
        self.params.grads[f"{self.name}.gamma"] += (g * xhat).reshape(-1, d).sum(axis=0)
        self.params.grads[f"{self.name}.beta"] += g.reshape(-1, d).sum(axis=0)
        dxhat = g * self.params.values[f"{self.name}.gamma"]
        return inv * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                      - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))


def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    z = z - z.max(axis=axis, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=axis, keepdims=True))


def scaled_dot_attention(q: np.ndarray, k: np.ndarray, v: np.ndarray):
    """Single-head attention over the last two axes.

    Returns:
        (output, weights) where weights = softmax(q k^T / sqrt(d_k)).
    """
    scores = q @ np.swapaxes(k, -1, -2) / math.sqrt(q.shape[-1])
    w = softmax(scores, axis=-1)
    return w @ v, w


def sinusoidal_encoding(length: int, dim: int) -> np.ndarray:
    pos = np.arange(length)[:, None]
    i = np.arange(dim)[None, :]
    angle = pos / np.power(10000.0, (2 * (i // 2)) / dim)
    return np.where(i % 2 == 0, np.sin(angle), np.cos(angle))


class MultiHeadSelfAttention(Layer):
    """Self-attention over a (batch, time, d) input with ``heads`` equal slices of d."""

    def __init__(self, params: ParameterSet, name: str, dim: int, heads: int, rng: np.random.Generator):
        if dim % heads:
            raise ValueError(f"model width {dim} not divisible by {heads} heads")
        self.name = name
        self.dim = dim
        self.heads = heads
        self.dk = dim // heads
        self.q = Linear(params, f"{name}.q", dim, dim, rng)
        self.k = Linear(params, f"{name}.k", dim, dim, rng)
        self.v = Linear(params, f"{name}.v", dim, dim, rng)
        self.o = Linear(params, f"{name}.o", dim, dim, rng)
        self._cache = None
        self.last_weights: Optional[np.ndarray] = None

    def _split(self, x):
        b, t, _ = x.shape
        return x.reshape(b, t, self.heads, self.dk).transpose(0, 2, 1, 3)

    def _merge(self, x):
        b, h, t, dk = x.shape
        return x.transpose(0, 2, 1, 3).reshape(b, t, h * dk)

    def forward(self, x, train=False, rng=None):
        if x.ndim != 3 or x.shape[-1] != self.dim:
            raise DimensionError(self.name, f"(batch, time, {self.dim})", x.shape)
        q = self._split(self.q.forward(x))
        k = self._split(self.k.forward(x))
        v = self._split(self.v.forward(x))
        ctx, w = scaled_dot_attention(q, k, v)
        self.last_weights = w
        self._cache = (q, k, v, w)
        return self.o.forward(self._merge(ctx))

    def backward(self, g):
        q, k, v, w = self._pop()
        dctx = self._split(self.o.backward(g))
        dw = dctx @ np.swapaxes(v, -1, -2)
        dv = np.swapaxes(w, -1, -2) @ dctx
        ds = w * (dw - (dw * w).sum(axis=-1, keepdims=True)) / math.sqrt(self.dk)
        dq = ds @ k
        dk = np.swapaxes(ds, -1, -2) @ q
        return (self.q.backward(self._merge(dq))
                + self.k.backward(self._merge(dk))
                + self.v.backward(self._merge(dv)))
