"""PPO actor-critic with the clipped surrogate objective and GAE."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from ..errors import NotReadyError
from ..nn import Adam, Network, ParameterSet, build_network, log_softmax, regularization_penalty, softmax
from ..rl import Trajectory, gae


def ppo_ratio(new_log_prob, old_log_prob):
    return np.exp(np.asarray(new_log_prob) - np.asarray(old_log_prob))


def ppo_clip_objective(ratio, adv, eps: float):
    """min(R*A, clip(R, 1-eps, 1+eps)*A), elementwise."""
    ratio = np.asarray(ratio, dtype=np.float64)
    adv = np.asarray(adv, dtype=np.float64)
    return np.minimum(ratio * adv, np.clip(ratio, 1.0 - eps, 1.0 + eps) * adv)


def critic_loss(values, targets) -> float:
    values = np.asarray(values, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if values.shape != targets.shape:
        raise ValueError("values and targets must have equal lengths")
    return float(np.mean((values - targets) ** 2))


@dataclass
class PPOConfig:
    gamma: float = 0.75
    lam: float = 0.95
    clip: float = 0.2
    epochs: int = 4
    minibatch: int = 64
    horizon: int = 512
    lr: float = 1e-4
    critic_lr: Optional[float] = None
    critic_coef: float = 0.5
    entropy_coef: float = 0.0
    normalize_advantages: bool = True
    n_actions: int = 3

    def __post_init__(self):
        if not 0.0 < self.clip < 0.5:
            raise ValueError("clip must lie in (0, 0.5)")


@dataclass
class Rollout:
    """Experience gathered under the current policy.

    ``values`` has one extra trailing entry: the critic's estimate for the
    state after the last step (ignored when that step is terminal).
    """

    states: List[np.ndarray] = field(default_factory=list)
    actions: List[int] = field(default_factory=list)
    log_probs: List[float] = field(default_factory=list)
    rewards: List[float] = field(default_factory=list)
    dones: List[bool] = field(default_factory=list)
    values: List[float] = field(default_factory=list)

    def add(self, state, action, log_prob, reward, done, value):
        self.states.append(np.asarray(state, dtype=np.float64))
        self.actions.append(int(action))
        self.log_probs.append(float(log_prob))
        self.rewards.append(float(reward))
        self.dones.append(bool(done))
        self.values.append(float(value))

    def __len__(self) -> int:
        return len(self.actions)

    def trajectory(self, bootstrap_value: float) -> Trajectory:
        return Trajectory(self.rewards, list(self.values) + [bootstrap_value], self.dones)


@dataclass
class PPODiagnostics:
    policy_loss: float
    critic_loss: float
    mean_ratio: float
    clip_fraction: float
    first_ratios: np.ndarray


class PPOAgent:
    kind = "ppo"

    def __init__(self, actor: Network, critic: Network, config: Optional[PPOConfig] = None, seed: int = 0):
        self.config = config or PPOConfig()
        self.actor = actor
        self.critic = critic
        self.actor_opt = Adam(actor.params, lr=self.config.lr)
        self.critic_opt = Adam(critic.params, lr=self.config.critic_lr or self.config.lr)
        self.rng = np.random.default_rng(seed)
        self.steps = 0
        self.updates = 0
        self.generation = 0

    def probs(self, obs) -> np.ndarray:
        return softmax(self.actor.forward(obs, train=False))

    def value(self, obs) -> float:
        return float(np.ravel(self.critic.forward(obs, train=False))[0])

    def act(self, obs, train: bool = False, rng: Optional[np.random.Generator] = None):
        """Returns (action, log-probability, value estimate).

        Train mode samples from the policy; eval mode takes the most likely
        action (lowest index on ties).
        """
        rng = rng or self.rng
        logp = log_softmax(self.actor.forward(obs, train=False))
        if train:
            a = int(rng.choice(len(logp), p=np.exp(logp)))
        else:
            a = int(np.argmax(logp))
        return a, float(logp[a]), self.value(obs)

    def greedy(self, obs) -> int:
        return int(np.argmax(self.actor.forward(obs, train=False)))

    def update(self, rollout: Rollout, bootstrap_value: float = 0.0) -> PPODiagnostics:
        """Several epochs of minibatch descent on -clip objective + c_v * critic loss.

        Advantages and return targets come from the rollout's value estimates
        (the pre-update critic); old log-probabilities are evaluated once under
        the pre-update actor and held fixed for every epoch.
        """
        c = self.config
        n = len(rollout)
        if n < c.minibatch:
            raise NotReadyError(f"rollout has {n} steps < minibatch {c.minibatch}")
        traj = rollout.trajectory(bootstrap_value)
        adv = gae(traj, c.gamma, c.lam)
        returns = adv + traj.values[:-1]
        if c.normalize_advantages and n > 1:
            adv = (adv - adv.mean()) / (adv.std() + 1e-8)
        states = np.stack(rollout.states)
        actions = np.asarray(rollout.actions)
        perms = [self.rng.permutation(n) for _ in range(c.epochs)]
        old_logp = self._old_log_probs(states, actions, perms[0])

        pl, cl, ratios_all, clipped_all = [], [], [], []
        first_ratios = None
        for perm in perms:
            for start in range(0, n, c.minibatch):
                idx = perm[start:start + c.minibatch]
                p_loss, ratio = self._actor_step(states[idx], actions[idx], old_logp[idx], adv[idx])
                v_loss = self._critic_step(states[idx], returns[idx])
                if first_ratios is None:
                    first_ratios = ratio
                pl.append(p_loss)
                cl.append(v_loss)
                ratios_all.append(ratio)
                clipped_all.append(np.abs(ratio - 1.0) > c.clip)
        self.updates += 1
        r = np.concatenate(ratios_all)
        return PPODiagnostics(
            policy_loss=float(np.mean(pl)),
            critic_loss=float(np.mean(cl)),
            mean_ratio=float(r.mean()),
            clip_fraction=float(np.concatenate(clipped_all).mean()),
            first_ratios=first_ratios,
        )

    def _old_log_probs(self, states, actions, perm):
        """Log-probabilities under the pre-update actor.

        Evaluated on the same minibatch arrays the first epoch will see, so
        the first ratios are exactly 1 rather than 1 up to BLAS rounding.
        """
        out = np.empty(len(actions))
        for start in range(0, len(actions), self.config.minibatch):
            idx = perm[start:start + self.config.minibatch]
            logp = log_softmax(self.actor.forward(states[idx], train=False))
            out[idx] = logp[np.arange(len(idx)), actions[idx]]
        return out

    def _actor_step(self, s, a, old_logp, adv):
        c = self.config
        b = len(a)
        logits = self.actor.forward(s, train=True, rng=self.rng)
        logp_all = log_softmax(logits)
        p = np.exp(logp_all)
        logp = logp_all[np.arange(b), a]
        ratio = ppo_ratio(logp, old_logp)
        surr1 = ratio * adv
        surr2 = np.clip(ratio, 1.0 - c.clip, 1.0 + c.clip) * adv
        loss = -float(np.mean(np.minimum(surr1, surr2)))
        # the clipped branch has zero slope; where the branches tie the ratio is inside the clip range
        coef = np.where(surr1 <= surr2, adv * ratio, 0.0)
        onehot = np.zeros_like(p)
        onehot[np.arange(b), a] = 1.0
        grad = -(coef[:, None] * (onehot - p)) / b
        if c.entropy_coef:
            ent = -(p * logp_all).sum(axis=1)
            loss -= c.entropy_coef * float(ent.mean())
            grad += c.entropy_coef * p * (logp_all + ent[:, None]) / b
        self.actor.backward(grad)
        loss += regularization_penalty(self.actor.params, self.actor.l1, self.actor.l2)
        self.actor_opt.step(self.actor.params)
        return loss, ratio

    def _critic_step(self, s, targets):
        c = self.config
        v = self.critic.forward(s, train=True, rng=self.rng)[:, 0]
        loss = critic_loss(v, targets)
        grad = (c.critic_coef * 2.0 * (v - targets) / len(v))[:, None]
        self.critic.backward(grad)
        loss += regularization_penalty(self.critic.params, self.critic.l1, self.critic.l2)
        self.critic_opt.step(self.critic.params)
        return loss

    # -- checkpoints ----------------------------------------------------------

    def snapshot(self) -> dict:
        return {"actor": self.actor.params.snapshot(), "critic": self.critic.params.snapshot()}

    def load_snapshot(self, snap: dict) -> None:
        self.actor.params.load_snapshot(snap["actor"])
        self.critic.params.load_snapshot(snap["critic"])

    def checkpoint(self) -> dict:
        return {
            "kind": self.kind,
            "config": asdict(self.config),
            "network": {"actor": self.actor.config_dict(), "critic": self.critic.config_dict()},
            "params": {"actor": self.actor.params.to_dict(), "critic": self.critic.params.to_dict()},
            "steps": self.steps,
            "updates": self.updates,
            "generation": self.generation,
        }

    @classmethod
    def from_checkpoint(cls, ckpt: dict, seed: int = 0) -> "PPOAgent":
        agent = cls(build_network(ckpt["network"]["actor"]), build_network(ckpt["network"]["critic"]),
                    PPOConfig(**ckpt["config"]), seed=seed)
        agent.actor.params.copy_from(ParameterSet.from_dict(ckpt["params"]["actor"]))
        agent.critic.params.copy_from(ParameterSet.from_dict(ckpt["params"]["critic"]))
        agent.steps = ckpt["steps"]
        agent.updates = ckpt["updates"]
        agent.generation = ckpt["generation"]
        return agent
