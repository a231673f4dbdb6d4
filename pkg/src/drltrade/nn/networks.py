"""Dense feed-forward and transformer-encoder networks.

Both networks return raw head outputs (Q-values, policy logits or a value);
softmax for policies is applied by the caller. ``backward`` takes the
gradient of the loss with respect to that output and accumulates parameter
gradients into ``net.params.grads``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import List, Optional

import numpy as np

from ..errors import DimensionError, StateError
from .layers import (
    Dropout,
    LayerNorm,
    Linear,
    MultiHeadSelfAttention,
    make_activation,
    sinusoidal_encoding,
)
from .params import ParameterSet


@dataclass
class DenseNetConfig:
    widths: List[int]
    activation: str = "tanh"
    dropout: float = 0.0
    l1: float = 0.0
    l2: float = 0.0
    head_gain: float = 1.0

    def __post_init__(self):
        if len(self.widths) < 2 or any(w <= 0 for w in self.widths):
            raise ValueError("widths needs >= 2 positive entries (input ... output)")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.l1 < 0 or self.l2 < 0:
            raise ValueError("l1/l2 must be >= 0")


@dataclass
class TransformerConfig:
    n_features: int
    n_out: int
    seq_len: int = 20
    d_model: int = 32
    heads: int = 2
    layers: int = 2
    ff: int = 64
    dropout: float = 0.0
    ff_activation: str = "tanh"
    l1: float = 0.0
    l2: float = 0.0
    head_gain: float = 1.0
    ln_eps: float = 1e-9

    def __post_init__(self):
        if self.d_model % self.heads:
            raise ValueError("d_model must be divisible by heads")
        if self.layers < 1:
            raise ValueError("need at least one encoder layer")


class Network:
    """Common plumbing: parameter set, recorded-pass bookkeeping, serialization."""

    arch = "network"
    config = None

    def __init__(self):
        self.params = ParameterSet(self.arch)
        self._recorded = False

    @property
    def l1(self) -> float:
        return self.config.l1

    @property
    def l2(self) -> float:
        return self.config.l2

    def __call__(self, x, train: bool = False, rng: Optional[np.random.Generator] = None):
        return self.forward(x, train=train, rng=rng)

    def _begin_backward(self):
        if not self._recorded:
            raise StateError(f"{self.arch}: backward called without a recorded forward pass")
        self._recorded = False

    def config_dict(self) -> dict:
        return {"arch": self.arch, **asdict(self.config)}


class DenseNet(Network):
    arch = "dense"

    def __init__(self, config: DenseNetConfig, seed: int = 0):
        super().__init__()
        self.config = config
        rng = np.random.default_rng(seed)
        self.layers = []
        widths = config.widths
        n = len(widths) - 1
        for i in range(n):
            last = i == n - 1
            self.layers.append(Linear(self.params, f"layer{i}", widths[i], widths[i + 1], rng,
                                      gain=config.head_gain if last else 1.0))
            if not last:
                self.layers.append(make_activation(config.activation, f"act{i}"))
                if config.dropout > 0:
                    self.layers.append(Dropout(config.dropout, f"dropout{i}"))

    @property
    def n_in(self) -> int:
        return self.config.widths[0]

    @property
    def n_out(self) -> int:
        return self.config.widths[-1]

    def forward(self, x, train=False, rng=None):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.ndim != 2:
            raise DimensionError("layer0", "(batch, features)", x.shape)
        for layer in self.layers:
            x = layer.forward(x, train=train, rng=rng)
        self._recorded = True
        self._single = single
        return x[0] if single else x

    def backward(self, g):
        self._begin_backward()
        g = np.asarray(g, dtype=np.float64)
        if self._single:
            g = g[None, :]
        for layer in reversed(self.layers):
            g = layer.backward(g)
        return g[0] if self._single else g


class EncoderLayer:
    """Post-norm encoder block: LN(x + drop(MHA(x))) then LN(h + drop(FFN(h)))."""

    def __init__(self, params: ParameterSet, name: str, cfg: TransformerConfig, rng: np.random.Generator):
        self.name = name
        self.attn = MultiHeadSelfAttention(params, f"{name}.attn", cfg.d_model, cfg.heads, rng)
        self.drop1 = Dropout(cfg.dropout, f"{name}.drop1")
        self.ln1 = LayerNorm(params, f"{name}.ln1", cfg.d_model, cfg.ln_eps)
        self.ff1 = Linear(params, f"{name}.ff1", cfg.d_model, cfg.ff, rng)
        self.act = make_activation(cfg.ff_activation, f"{name}.act")
        self.ff2 = Linear(params, f"{name}.ff2", cfg.ff, cfg.d_model, rng)
        self.drop2 = Dropout(cfg.dropout, f"{name}.drop2")
        self.ln2 = LayerNorm(params, f"{name}.ln2", cfg.d_model, cfg.ln_eps)

    def forward(self, x, train=False, rng=None):
        a = self.drop1.forward(self.attn.forward(x, train, rng), train, rng)
        h = self.ln1.forward(x + a)
        f = self.ff2.forward(self.act.forward(self.ff1.forward(h)))
        f = self.drop2.forward(f, train, rng)
        return self.ln2.forward(h + f)

    def backward(self, g):
        g = self.ln2.backward(g)
        gf = self.ff1.backward(self.act.backward(self.ff2.backward(self.drop2.backward(g))))
        g = self.ln1.backward(g + gf)
        ga = self.attn.backward(self.drop1.backward(g))
        return g + ga


class TransformerNet(Network):
    """Encoder-only transformer mapping a (T, F) window to a head vector.

    Input rows are projected to ``d_model``, sinusoidal position codes are
    added, and the head reads the final time step.
    """

    arch = "transformer"

    def __init__(self, config: TransformerConfig, seed: int = 0):
        super().__init__()
        self.config = config
        rng = np.random.default_rng(seed)
        c = config
        self.embed = Linear(self.params, "embed", c.n_features, c.d_model, rng)
        self.pos = sinusoidal_encoding(c.seq_len, c.d_model)
        self.blocks = [EncoderLayer(self.params, f"enc{i}", c, rng) for i in range(c.layers)]
        self.head = Linear(self.params, "head", c.d_model, c.n_out, rng, gain=c.head_gain)

    @property
    def n_out(self) -> int:
        return self.config.n_out

    def forward(self, x, train=False, rng=None):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 2
        if single:
            x = x[None]
        if x.ndim != 3:
            raise DimensionError("embed", "(batch, time, features)", x.shape)
        if x.shape[1] != self.config.seq_len:
            raise DimensionError("embed", f"sequence length {self.config.seq_len}", x.shape[1])
        h = self.embed.forward(x) + self.pos
        for blk in self.blocks:
            h = blk.forward(h, train, rng)
        self._T = h.shape[1]
        out = self.head.forward(h[:, -1, :])
        self._recorded = True
        self._single = single
        return out[0] if single else out

    def backward(self, g):
        self._begin_backward()
        g = np.asarray(g, dtype=np.float64)
        if self._single:
            g = g[None]
        gl = self.head.backward(g)
        gh = np.zeros((gl.shape[0], self._T, gl.shape[1]))
        gh[:, -1, :] = gl
        for blk in reversed(self.blocks):
            gh = blk.backward(gh)
        gx = self.embed.backward(gh)
        return gx[0] if self._single else gx


def build_network(config_dict: dict, seed: int = 0) -> Network:
    """Rebuild a network from ``Network.config_dict()`` output."""
    cfg = dict(config_dict)
    arch = cfg.pop("arch")
    if arch == "dense":
        return DenseNet(DenseNetConfig(**cfg), seed)
    if arch == "transformer":
        return TransformerNet(TransformerConfig(**cfg), seed)
    raise ValueError(f"unknown architecture {arch!r}")
