"""Double DQN with experience replay, hard target sync and linear epsilon decay."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import NotReadyError
from ..nn import Adam, Network, ParameterSet, build_network, regularization_penalty
from ..rl import Transition
from .replay import ReplayBuffer


@dataclass
class DDQNConfig:
    gamma: float = 0.75
    lr: float = 1e-4
    batch_size: int = 64
    buffer_capacity: int = 50_000
    target_sync: int = 500
    eps_start: float = 1.0
    eps_end: float = 0.05
    # linear decay horizon in env steps; the trainer sets it to half the run
    eps_decay_steps: int = 10_000
    train_every: int = 1
    n_actions: int = 3


class DDQNAgent:
    """Primary Q-network selects the next action, target network evaluates it."""

    kind = "ddqn"

    def __init__(self, net: Network, config: Optional[DDQNConfig] = None, seed: int = 0):
        self.config = config or DDQNConfig()
        self.q = net
        self.target = build_network(net.config_dict())
        self.target.params.copy_from(net.params)
        self.opt = Adam(net.params, lr=self.config.lr)
        self.buffer = ReplayBuffer(self.config.buffer_capacity, seed=seed + 1)
        self.rng = np.random.default_rng(seed)
        self.steps = 0
        self.train_steps = 0
        self.generation = 0

    # -- acting ---------------------------------------------------------------

    @property
    def epsilon(self) -> float:
        c = self.config
        frac = min(1.0, self.steps / max(1, c.eps_decay_steps))
        return c.eps_start + frac * (c.eps_end - c.eps_start)

    def q_values(self, obs) -> np.ndarray:
        return self.q.forward(obs, train=False)

    def act(self, obs, train: bool = False, rng: Optional[np.random.Generator] = None) -> int:
        rng = rng or self.rng
        if train and rng.random() < self.epsilon:
            return int(rng.integers(self.config.n_actions))
        # np.argmax returns the lowest index among ties
        return int(np.argmax(self.q_values(obs)))

    def greedy(self, obs) -> int:
        return self.act(obs, train=False)

    # -- learning -------------------------------------------------------------

    def _stack_next(self, batch: Sequence[Transition]) -> np.ndarray:
        ref = np.asarray(batch[0].state, dtype=np.float64)
        return np.stack([np.zeros_like(ref) if t.next_state is None else np.asarray(t.next_state, dtype=np.float64)
                         for t in batch])

    def targets(self, batch: Sequence[Transition]) -> np.ndarray:
        """r + gamma * Q_target(s', argmax_a' Q_primary(s', a')), masked at terminals."""
        s2 = self._stack_next(batch)
        a_star = np.argmax(self.q.forward(s2, train=False), axis=1)
        q_eval = self.target.forward(s2, train=False)[np.arange(len(batch)), a_star]
        r = np.array([t.reward for t in batch])
        nonterm = np.array([0.0 if t.done else 1.0 for t in batch])
        return r + self.config.gamma * q_eval * nonterm

    def target_value(self, transition: Transition) -> float:
        return float(self.targets([transition])[0])

    def dqn_targets(self, batch: Sequence[Transition]) -> np.ndarray:
        """Single-network target: r + gamma * max_a' Q_target(s', a')."""
        s2 = self._stack_next(batch)
        q_max = self.target.forward(s2, train=False).max(axis=1)
        r = np.array([t.reward for t in batch])
        nonterm = np.array([0.0 if t.done else 1.0 for t in batch])
        return r + self.config.gamma * q_max * nonterm

    def train_step(self, batch: Sequence[Transition]) -> float:
        """One Adam step on mean (y - Q(s,a))^2 plus weight penalty; returns the loss."""
        y = self.targets(batch)
        s = np.stack([np.asarray(t.state, dtype=np.float64) for t in batch])
        a = np.array([t.action for t in batch])
        n = len(batch)
        q = self.q.forward(s, train=True, rng=self.rng)
        q_sa = q[np.arange(n), a]
        err = q_sa - y
        grad = np.zeros_like(q)
        grad[np.arange(n), a] = 2.0 * err / n
        self.q.backward(grad)
        penalty = regularization_penalty(self.q.params, self.q.l1, self.q.l2)
        self.opt.step(self.q.params)
        self.train_steps += 1
        if self.train_steps % self.config.target_sync == 0:
            self.sync_target()
        return float(np.mean(err * err) + penalty)

    def learn(self) -> float:
        if len(self.buffer) < self.config.batch_size:
            raise NotReadyError(f"buffer holds {len(self.buffer)} < batch {self.config.batch_size}")
        return self.train_step(self.buffer.sample(self.config.batch_size))

    def observe(self, transition: Transition) -> Optional[float]:
        """Store a transition and train every ``train_every`` env steps once the buffer allows."""
        self.buffer.push(transition)
        self.steps += 1
        if self.steps % self.config.train_every:
            return None
        try:
            return self.learn()
        except NotReadyError:
            return None

    def sync_target(self) -> None:
        self.target.params.copy_from(self.q.params)

    # -- checkpoints ----------------------------------------------------------

    def snapshot(self) -> dict:
        return {"q": self.q.params.snapshot(), "target": self.target.params.snapshot()}

    def load_snapshot(self, snap: dict) -> None:
        self.q.params.load_snapshot(snap["q"])
        self.target.params.load_snapshot(snap["target"])

    def checkpoint(self) -> dict:
        return {
            "kind": self.kind,
            "config": asdict(self.config),
            "network": self.q.config_dict(),
            "params": {"q": self.q.params.to_dict(), "target": self.target.params.to_dict()},
            "steps": self.steps,
            "train_steps": self.train_steps,
            "generation": self.generation,
        }

    @classmethod
    def from_checkpoint(cls, ckpt: dict, seed: int = 0) -> "DDQNAgent":
        agent = cls(build_network(ckpt["network"]), DDQNConfig(**ckpt["config"]), seed=seed)
        agent.q.params.copy_from(ParameterSet.from_dict(ckpt["params"]["q"]))
        agent.target.params.copy_from(ParameterSet.from_dict(ckpt["params"]["target"]))
        agent.steps = ckpt["steps"]
        agent.train_steps = ckpt["train_steps"]
        agent.generation = ckpt["generation"]
        return agent
