"""Tabular Q-learning, kept as a small-MDP reference for the deep agents."""

from __future__ import annotations

from collections import defaultdict
from typing import Hashable

import numpy as np

from ..rl import Transition


class QTable:
    def __init__(self, n_actions: int, alpha: float = 0.1, gamma: float = 0.75):
        self.n_actions = n_actions
        self.alpha = alpha
        self.gamma = gamma
        self.q = defaultdict(lambda: np.zeros(self.n_actions))

    def __getitem__(self, key):
        s, a = key
        return float(self.q[s][a])

    def values(self, state: Hashable) -> np.ndarray:
        return self.q[state].copy()

    def update(self, tr: Transition) -> "QTable":
        """Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)); terminal drops the max."""
        best_next = 0.0 if tr.done else float(self.q[tr.next_state].max())
        row = self.q[tr.state]
        row[tr.action] += self.alpha * (tr.reward + self.gamma * best_next - row[tr.action])
        return self

    def greedy(self, state: Hashable) -> int:
        return int(np.argmax(self.q[state]))
