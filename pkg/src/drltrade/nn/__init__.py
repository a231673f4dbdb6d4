"""Small float64 neural-network core with hand-written backward passes."""

from .layers import log_softmax, scaled_dot_attention, sinusoidal_encoding, softmax
from .networks import (
    DenseNet,
    DenseNetConfig,
    Network,
    TransformerConfig,
    TransformerNet,
    build_network,
)
from .optim import Adam, regularization_penalty
from .params import ParameterSet

__all__ = [
    "Adam",
    "DenseNet",
    "DenseNetConfig",
    "Network",
    "ParameterSet",
    "TransformerConfig",
    "TransformerNet",
    "build_network",
    "log_softmax",
    "regularization_penalty",
    "scaled_dot_attention",
    "sinusoidal_encoding",
    "softmax",
]
