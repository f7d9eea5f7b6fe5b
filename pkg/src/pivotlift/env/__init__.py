"""Task environment: reward, termination, randomization, vectorization."""

from .config import (EnvConfig, RandomizationSpec, RewardWeights, TaskGoal,
                     TerminationThresholds, env_config_hash, load_env_config,
                     save_env_config)
from .pointreach import VecPointReachEnv, passive_return, scripted_return
from .reward import check_termination, goal_distances, task_reward
from .task import VecTaskEnv

__all__ = [
    "EnvConfig", "RandomizationSpec", "RewardWeights", "TaskGoal",
    "TerminationThresholds", "load_env_config", "save_env_config",
    "env_config_hash", "task_reward", "goal_distances", "check_termination",
    "VecTaskEnv", "VecPointReachEnv", "passive_return", "scripted_return",
]
