from __future__ import annotations

from dataclasses import asdict, dataclass, field

from ..errors import ConfigError


@dataclass
class PpoConfig:
    discount: float = 0.99
    gae_decay: float = 0.95
    clip_range: float = 0.2
    learning_rate: float = 5e-5
    kl_target: float = 8e-3
    horizon: int = 64
    minibatch_size: int = 512
    samples_per_iteration: int = 4096
    num_envs: int = 64
    epochs: int = 4
    entropy_coef: float = 0.0
    value_coef: float = 1.0
    max_iterations: int = 1500
    # weight on the task reward when blending with the style reward;
    # 1.0 disables the adversarial path entirely
    style_mix: float = 1.0
    checkpoint_interval: int = 100
    lr_bounds: tuple = (1e-7, 1e-3)
    policy_hidden: tuple = (256, 128, 64)
    value_hidden: tuple = (256, 128, 64)
    log_std_init: float = -1.0
    log_std_bounds: tuple = (-4.0, 1.0)

    def __post_init__(self):
        self.lr_bounds = tuple(self.lr_bounds)
        self.policy_hidden = tuple(self.policy_hidden)
        self.value_hidden = tuple(self.value_hidden)
        self.log_std_bounds = tuple(self.log_std_bounds)
        if self.num_envs * self.horizon != self.samples_per_iteration:
            raise ConfigError(
                f"num_envs ({self.num_envs}) * horizon ({self.horizon}) must "
                f"equal samples_per_iteration ({self.samples_per_iteration})")
        if self.samples_per_iteration % self.minibatch_size != 0:
            raise ConfigError(
                f"minibatch_size ({self.minibatch_size}) must divide "
                f"samples_per_iteration ({self.samples_per_iteration})")
        if not 0.0 <= self.style_mix <= 1.0:
            raise ConfigError(f"style_mix must lie in [0, 1], "
                              f"got {self.style_mix}")
        for name in ("discount", "gae_decay"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.clip_range <= 0.0 or self.learning_rate <= 0.0:
            raise ConfigError("clip_range and learning_rate must be positive")
        if self.epochs < 1 or self.horizon < 1 or self.max_iterations < 1:
            raise ConfigError("counts must be >= 1")

    def to_dict(self):
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, data):
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown trainer config keys: {sorted(unknown)}")
        return cls(**data)


def adapt_learning_rate(lr, approx_kl, target=8e-3, bounds=(1e-7, 1e-3)):
    """Halve-ish or grow the step size to keep updates near the target
    divergence. Inside the [target/2, 2*target] band the rate is kept."""
    if approx_kl > 2.0 * target:
        lr = lr / 1.5
    elif approx_kl < 0.5 * target:
        lr = lr * 1.5
    return min(max(lr, bounds[0]), bounds[1])
