"""Build an agent (DDQN or PPO) on a dense or transformer network from plain config."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, Optional, Tuple

from ..errors import ConfigError
from ..nn import DenseNet, DenseNetConfig, TransformerConfig, TransformerNet
from .ddqn import DDQNAgent, DDQNConfig
from .ppo import PPOAgent, PPOConfig

N_ACTIONS = 3
N_POSITION = 3


@dataclass
class AgentSpec:
    """Algorithm, network family and their hyperparameters.

    ``ddqn`` and ``ppo`` hold keyword overrides for ``DDQNConfig`` and
    ``PPOConfig``.
    """

    algo: str = "ppo"
    net: str = "dense"
    hidden: Tuple[int, ...] = (64, 64)
    activation: str = "tanh"
    dropout: float = 0.0
    l1: float = 0.0
    l2: float = 0.0
    d_model: int = 32
    heads: int = 2
    layers: int = 2
    ff: int = 64
    ddqn: Dict = field(default_factory=dict)
    ppo: Dict = field(default_factory=dict)

    def __post_init__(self):
        if self.algo not in ("ddqn", "ppo"):
            raise ConfigError(f"agent kind must be ddqn or ppo, got {self.algo!r}")
        if self.net not in ("dense", "transformer"):
            raise ConfigError(f"net kind must be dense or transformer, got {self.net!r}")
        self.hidden = tuple(self.hidden)
        try:
            DDQNConfig(**self.ddqn)
            PPOConfig(**self.ppo)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad agent hyperparameters: {exc}") from exc

    @property
    def label(self) -> str:
        return f"{self.algo}-{self.net}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


def _network(spec: AgentSpec, n_features: int, lookback: int, n_out: int, seed: int, head_gain: float):
    if spec.net == "dense":
        widths = [lookback * n_features + N_POSITION, *spec.hidden, n_out]
        return DenseNet(DenseNetConfig(widths, spec.activation, spec.dropout, spec.l1, spec.l2, head_gain), seed)
    cfg = TransformerConfig(n_features + N_POSITION, n_out, lookback, spec.d_model, spec.heads, spec.layers,
                            spec.ff, spec.dropout, l1=spec.l1, l2=spec.l2, head_gain=head_gain)
    return TransformerNet(cfg, seed)


def encoder_for(net_kind: str) -> Callable:
    """Observation -> network input: flat vector for dense nets, (T, F+3) for transformers."""
    if net_kind == "dense":
        return lambda obs: obs.flat()
    return lambda obs: obs.sequence()


def make_agent(spec: AgentSpec, n_features: int, lookback: int, seed: int = 0, overrides: Optional[dict] = None):
    """Fresh agent with seeded weights.

    Args:
        n_features: feature columns per bar (the position one-hot is added here).
        overrides: extra config keywords applied on top of the spec's own.
    """
    overrides = overrides or {}
    if spec.algo == "ddqn":
        cfg = DDQNConfig(**{**spec.ddqn, **overrides})
        net = _network(spec, n_features, lookback, N_ACTIONS, seed, 1.0)
        return DDQNAgent(net, cfg, seed=seed + 7)
    cfg = PPOConfig(**{**spec.ppo, **overrides})
    # small initial logits keep the starting policy close to uniform
    actor = _network(spec, n_features, lookback, N_ACTIONS, seed, 0.01)
    critic = _network(spec, n_features, lookback, 1, seed + 1, 1.0)
    return PPOAgent(actor, critic, cfg, seed=seed + 7)
