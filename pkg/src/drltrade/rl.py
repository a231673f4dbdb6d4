"""Value-estimation primitives: TD(0), TD(lambda), advantages, GAE, discounted returns.

All functions are pure: inputs are never modified.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Hashable, Sequence

import numpy as np


@dataclass(frozen=True)
class Transition:
    state: Any
    action: int
    reward: float
    next_state: Any
    done: bool = False


@dataclass
class Trajectory:
    """Rewards and terminal flags of T steps plus T+1 value estimates.

    ``values[T]`` is the bootstrap value of the state after the last step;
    it is ignored when ``dones[T-1]`` is set.
    """

    rewards: np.ndarray
    values: np.ndarray
    dones: np.ndarray = None

    def __post_init__(self):
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.dones is None:
            self.dones = np.zeros(len(self.rewards), dtype=bool)
        self.dones = np.asarray(self.dones, dtype=bool)
        if len(self.values) != len(self.rewards) + 1:
            raise ValueError("values must hold one more entry than rewards (bootstrap value)")
        if len(self.dones) != len(self.rewards):
            raise ValueError("dones and rewards lengths differ")

    def __len__(self) -> int:
        return len(self.rewards)


def td0_error(r_next: float, v_s: float, v_s_next: float, gamma: float, terminal: bool = False) -> float:
    """One-step Bellman residual; a terminal step does not bootstrap."""
    return r_next + (0.0 if terminal else gamma * v_s_next) - v_s


def td0_update(v_s: float, delta: float, alpha: float) -> float:
    return v_s + alpha * delta


def td_lambda_episode(
    transitions: Sequence[Transition],
    values: Dict[Hashable, float],
    gamma: float,
    lam: float,
    alpha: float,
    trace: str = "accumulating",
) -> Dict[Hashable, float]:
    """Online backward-view TD(lambda) over one episode of tabular states.

    Each step computes the TD error with the current table, bumps the trace
    of the visited state (``+1`` when accumulating, ``=1`` when replacing),
    moves every traced state by ``alpha * delta * trace`` and then decays all
    traces by ``gamma * lam``.

    Args:
        transitions: the episode, in order; ``state``/``next_state`` are table keys.
        values: state -> value. Every visited state must be present.
        trace: "accumulating" or "replacing".

    Returns:
        A new table; ``values`` is left untouched.
    """
    if trace not in ("accumulating", "replacing"):
        raise ValueError(f"unknown trace mode {trace!r}")
    if not transitions:
        raise ValueError("empty episode")
    v = dict(values)
    z: Dict[Hashable, float] = {}
    for tr in transitions:
        if tr.state not in v:
            raise KeyError(f"unknown state {tr.state!r}")
        v_next = 0.0
        if not tr.done:
            if tr.next_state not in v:
                raise KeyError(f"unknown state {tr.next_state!r}")
            v_next = v[tr.next_state]
        delta = td0_error(tr.reward, v[tr.state], v_next, gamma, tr.done)
        if trace == "accumulating":
            z[tr.state] = z.get(tr.state, 0.0) + 1.0
        else:
            z[tr.state] = 1.0
        for s, zs in z.items():
            v[s] += alpha * delta * zs
        decay = gamma * lam
        for s in z:
            z[s] *= decay
    return v


def advantage(q_sa: float, v_s: float) -> float:
    return q_sa - v_s


def td_errors(traj: Trajectory, gamma: float) -> np.ndarray:
    nonterminal = 1.0 - traj.dones.astype(np.float64)
    return traj.rewards + gamma * traj.values[1:] * nonterminal - traj.values[:-1]


def gae(traj: Trajectory, gamma: float, lam: float) -> np.ndarray:
    """Generalised advantage estimates, one per step.

    Backward recursion ``A_t = delta_t + gamma*lam*A_{t+1}``; the sum is
    cut at terminal steps so advantages never leak across episodes.
    """
    deltas = td_errors(traj, gamma)
    adv = np.zeros_like(deltas)
    acc = 0.0
    for t in range(len(deltas) - 1, -1, -1):
        if traj.dones[t]:
            acc = 0.0
        acc = deltas[t] + gamma * lam * acc
        adv[t] = acc
    return adv


def discounted_returns(rewards, gamma: float, bootstrap: float = 0.0, dones=None) -> np.ndarray:
    """``G_t = r_t + gamma * G_{t+1}``, seeded with ``bootstrap`` after the last step.

    A set ``dones[t]`` restarts the sum at step t (no bootstrapping past it).
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    if dones is None:
        dones = np.zeros(len(rewards), dtype=bool)
    out = np.zeros_like(rewards)
    acc = float(bootstrap)
    for t in range(len(rewards) - 1, -1, -1):
        if dones[t]:
            acc = 0.0
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out
