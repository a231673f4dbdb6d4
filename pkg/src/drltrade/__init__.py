"""Deep reinforcement learning trading engine: DDQN and PPO agents, walk-forward evaluation."""

__version__ = "0.1.0"
