"""Learning agents: DDQN, PPO and a tabular Q-learning reference."""

from .ddqn import DDQNAgent, DDQNConfig
from .factory import AgentSpec, encoder_for, make_agent
from .ppo import PPOAgent, PPOConfig, PPODiagnostics, Rollout, critic_loss, ppo_clip_objective, ppo_ratio
from .replay import ReplayBuffer
from .tabular import QTable

__all__ = [
    "AgentSpec",
    "encoder_for",
    "make_agent",
    "DDQNAgent",
    "DDQNConfig",
    "PPOAgent",
    "PPOConfig",
    "PPODiagnostics",
    "QTable",
    "ReplayBuffer",
    "Rollout",
    "critic_loss",
    "ppo_clip_objective",
    "ppo_ratio",
]
