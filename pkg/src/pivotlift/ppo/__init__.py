"""On-policy trainer: clipped surrogate, advantage estimation, logging."""

from .config import PpoConfig, adapt_learning_rate
from .gae import compute_gae, normalize_advantages
from .norm import RunningNorm
from .policy import GaussianPolicy, ValueNet
from .trainer import PpoTrainer, load_policy_bundle
from .update import approx_kl_k3, ppo_update, surrogate_objective

__all__ = [
    "GaussianPolicy",
    "PpoConfig",
    "PpoTrainer",
    "RunningNorm",
    "ValueNet",
    "adapt_learning_rate",
    "approx_kl_k3",
    "compute_gae",
    "load_policy_bundle",
    "normalize_advantages",
    "ppo_update",
    "surrogate_objective",
]
