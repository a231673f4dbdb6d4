"""Adam optimizer and L1/L2 weight penalties."""

from __future__ import annotations

from typing import Dict

import numpy as np

from .params import ParameterSet


def regularization_penalty(params: ParameterSet, l1: float, l2: float) -> float:
    """Return ``l1*sum|w| + l2*sum(w^2)`` over weight matrices and add its gradient.

    Only parameters with two or more dimensions are penalised; biases and
    layer-norm gains/offsets are left alone.
    """
    if l1 < 0 or l2 < 0:
        raise ValueError("penalty coefficients must be >= 0")
    if l1 == 0 and l2 == 0:
        return 0.0
    total = 0.0
    for name, w in params.items():
        if w.ndim < 2:
            continue
        total += l1 * float(np.abs(w).sum()) + l2 * float((w * w).sum())
        params.grads[name] += l1 * np.sign(w) + 2.0 * l2 * w
    return total


class Adam:
    """Bias-corrected Adam over one ParameterSet.

    Holds the moment accumulators and step counter; ``step`` applies one
    update and zeroes the gradients.
    """

    def __init__(self, params: ParameterSet, lr: float = 1e-4, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: Dict[str, np.ndarray] = {k: np.zeros_like(v) for k, v in params.items()}
        self.v: Dict[str, np.ndarray] = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: ParameterSet) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for name, w in params.items():
            g = params.grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            w -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        params.zero_grad()

    def state_dict(self) -> dict:
        return {
            "t": self.t, "lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps,
            "m": {k: v.ravel().tolist() for k, v in self.m.items()},
            "v": {k: v.ravel().tolist() for k, v in self.v.items()},
        }
