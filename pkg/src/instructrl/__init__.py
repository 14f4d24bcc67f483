"""Instruction-conditioned RL: subtask translation, goal-managed environments,
PPO with an adaptive curriculum, and structure-matching evaluation."""

__version__ = "0.1.0"
