"""Run configuration: one file naming every input of a training run.

The referenced files are hashed at load time and the hashes travel with
the run output, so any result can be traced back to exact inputs.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import asdict, dataclass

import yaml

from ..errors import ConfigError


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass(frozen=True)
class RunConfig:
    """Inputs of one training run.

    scene/env/ppo are config file paths; None means library defaults.
    style_mix is the task-reward weight: 1.0 trains on the task reward
    alone, anything lower blends in the adversarial style reward and
    requires a demonstration file.
    """

    out_dir: str
    scene: str | None = None
    env: str | None = None
    ppo: str | None = None
    demo: str | None = None
    style_mix: float = 1.0
    seed: int = 0
    iterations: int | None = None
    deterministic: bool = True

    def __post_init__(self):
        if not 0.0 <= self.style_mix <= 1.0:
            raise ConfigError(
                f"style_mix must lie in [0, 1], got {self.style_mix}")
        if self.style_mix < 1.0 and self.demo is None:
            raise ConfigError("style_mix < 1 requires a demo file")
        if self.iterations is not None and self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1: {self.iterations}")
        for name in ("scene", "env", "ppo", "demo"):
            p = getattr(self, name)
            if p is not None and not os.path.isfile(p):
                raise ConfigError(f"{name} file does not exist: {p}")

    def input_hashes(self):
        """sha256 of every referenced file, keyed by field name."""
        out = {}
        for name in ("scene", "env", "ppo", "demo"):
            p = getattr(self, name)
            if p is not None:
                out[name] = file_sha256(p)
        return out

    def to_dict(self):
        return asdict(self)


def load_run_config(path):
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as e:
        raise ConfigError(f"{path}: {e}")
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid config: {e}")
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: run config must be a mapping")
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    if "out_dir" not in raw:
        raise ConfigError(f"{path}: out_dir is required")
    # paths in the file are taken relative to the file's directory
    base = os.path.dirname(os.path.abspath(path))
    for key in ("scene", "env", "ppo", "demo", "out_dir"):
        if raw.get(key) is not None and not os.path.isabs(raw[key]):
            raw[key] = os.path.join(base, raw[key])
    try:
        return RunConfig(**raw)
    except TypeError as e:
        raise ConfigError(f"{path}: {e}")
