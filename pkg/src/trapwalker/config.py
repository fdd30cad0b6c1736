"""Global configuration: one YAML file, strict keys, paper-table defaults.

Every section maps onto an existing dataclass; loading an empty file yields
the full default stack (PPO table values, reward weights, randomization
ranges) and unknown keys are rejected by name.
"""

import dataclasses
from dataclasses import dataclass, field, is_dataclass

import yaml

from .env import EnvConfig
from .nn.networks import NetworkConfig
from .rewards import RewardLimits, RewardWeights
from .rl.ppo import PpoConfig
from .robot import RobotModel
from .training.pipeline import PipelineConfig, TerrainConfig


class ConfigError(ValueError):
    pass


@dataclass
class BenchmarkConfig:
    variant: str = "Mix"
    n_robots: int = 1000
    time_limit_s: float = 300.0
    batch_size: int = 64
    seed: int = 0


@dataclass
class TeleopConfig:
    port: int = 8800
    tick_rate_hz: float = 25.0
    terrain: str = "Mix"          # benchmark variant or "flat"/"curriculum"


@dataclass
class RewardConfig:
    weights: RewardWeights = field(default_factory=RewardWeights)
    limits: RewardLimits = field(default_factory=RewardLimits)


@dataclass
class Config:
    sim: RobotModel = field(default_factory=RobotModel)
    terrain: TerrainConfig = field(default_factory=TerrainConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    rewards: RewardConfig = field(default_factory=RewardConfig)
    networks: NetworkConfig = field(default_factory=NetworkConfig)
    ppo: PpoConfig = field(default_factory=PpoConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    benchmark: BenchmarkConfig = field(default_factory=BenchmarkConfig)
    teleop: TeleopConfig = field(default_factory=TeleopConfig)


def _build_dataclass(dc_type, data, path):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"section '{path}' must be a mapping")
    known = {f.name: f for f in dataclasses.fields(dc_type) if f.init}
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown config key '{path}.{key}'" if path else
                              f"unknown config key '{key}'")
    kwargs = {}
    probe = dc_type()
    for name, f in known.items():
        if name not in data:
            continue
        default = getattr(probe, name)
        value = data[name]
        child_path = f"{path}.{name}" if path else name
        if is_dataclass(default) and not isinstance(default, type):
            kwargs[name] = _build_dataclass(type(default), value, child_path)
        elif isinstance(default, tuple):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    try:
        return dc_type(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid values in section '{path or dc_type.__name__}': {exc}")


def config_to_dict(obj) -> dict:
    out = {}
    for f in dataclasses.fields(obj):
        if not f.init:
            continue
        value = getattr(obj, f.name)
        if is_dataclass(value) and not isinstance(value, type):
            out[f.name] = config_to_dict(value)
        elif isinstance(value, tuple):
            out[f.name] = list(value)
        else:
            out[f.name] = value
    return out


def load_config(path=None) -> Config:
    data = {}
    if path is not None:
        with open(path) as f:
            data = yaml.safe_load(f) or {}
    return _build_dataclass(Config, data, "")


def save_config(cfg: Config, path):
    with open(path, "w") as f:
        yaml.safe_dump(config_to_dict(cfg), f, sort_keys=True)
