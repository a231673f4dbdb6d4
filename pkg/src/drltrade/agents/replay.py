"""Fixed-capacity experience replay."""

from __future__ import annotations

from typing import List

import numpy as np

from ..rl import Transition


class ReplayBuffer:
    """Ring buffer of transitions; once full, the oldest entry is overwritten."""

    def __init__(self, capacity: int = 50_000, seed: int = 0):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items: List[Transition] = []
        self._pos = 0
        self.rng = np.random.default_rng(seed)

    def __len__(self) -> int:
        return len(self._items)

    def push(self, transition: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._pos] = transition
        self._pos = (self._pos + 1) % self.capacity

    def sample(self, batch_size: int) -> List[Transition]:
        """Draw ``batch_size`` distinct transitions uniformly."""
        idx = self.rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[i] for i in idx]

    def items(self) -> List[Transition]:
        """Contents from oldest to newest."""
        if len(self._items) < self.capacity:
            return list(self._items)
        return self._items[self._pos:] + self._items[:self._pos]
