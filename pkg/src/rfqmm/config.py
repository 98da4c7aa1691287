"""Run configuration: YAML file plus CLI overrides.

A config file has up to five top-level keys: preset, seed, episodes, out,
env, ppo. env and ppo hold flat key/value overrides; the generator is given
as 16 numbers in row-major order. Unknown keys anywhere are rejected.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import yaml

from .env import EnvConfig
from .errors import ConfigError
from .market import FillCurve, PriceParams
from .intensity import IntensityLevels
from .ppo import PpoConfig
from .scenarios import resolve_preset

TOP_LEVEL_KEYS = {"preset", "seed", "episodes", "out", "env", "ppo"}

ENV_DIRECT_KEYS = {"n_days", "z", "q_init", "phi", "delta_min", "delta_max",
                   "q_scale", "inventory_cap", "init_state", "exact_arrivals"}
PRICE_KEYS = {"kappa", "sigma", "s0", "dt"}
FILL_KEYS = {"alpha", "beta", "delta0"}
LEVEL_KEYS = {"lambda_low", "lambda_high"}
ENV_KEYS = ENV_DIRECT_KEYS | PRICE_KEYS | FILL_KEYS | LEVEL_KEYS | {"generator"}

PPO_KEYS = {"learning_rate", "gamma", "gae_lambda", "clip_epsilon", "n_envs",
            "rollout_horizon", "n_epochs", "minibatch_size", "vf_coef",
            "ent_coef", "max_grad_norm", "total_updates", "seed"}


@dataclass
class RunConfig:
    preset: str = "baseline"
    seed: int = 0
    episodes: int = 1000
    out: str | None = None
    env: dict = field(default_factory=dict)
    ppo: dict = field(default_factory=dict)

    def env_config(self) -> EnvConfig:
        base = resolve_preset(self.preset).env
        return apply_env_overrides(base, self.env)

    def ppo_config(self) -> PpoConfig:
        unknown = set(self.ppo) - PPO_KEYS
        if unknown:
            raise ConfigError(f"unknown ppo keys: {sorted(unknown)}")
        merged = {"seed": self.seed, **self.ppo}
        try:
            return PpoConfig(**merged)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, default=float)
        return hashlib.sha256(canon.encode()).hexdigest()


def apply_env_overrides(base: EnvConfig, overrides: dict) -> EnvConfig:
    unknown = set(overrides) - ENV_KEYS
    if unknown:
        raise ConfigError(f"unknown env keys: {sorted(unknown)}")
    try:
        direct = {k: v for k, v in overrides.items() if k in ENV_DIRECT_KEYS}
        cfg = base.with_overrides(**direct) if direct else base
        price_kw = {k: v for k, v in overrides.items() if k in PRICE_KEYS}
        if price_kw:
            cfg = cfg.with_overrides(price=replace(cfg.price, **price_kw))
        fill_kw = {k: v for k, v in overrides.items() if k in FILL_KEYS}
        if fill_kw:
            cfg = cfg.with_overrides(fills=replace(cfg.fills, **fill_kw))
        level_kw = {k: v for k, v in overrides.items() if k in LEVEL_KEYS}
        if level_kw:
            cfg = cfg.with_overrides(levels=replace(cfg.levels, **level_kw))
        if "generator" in overrides:
            cfg = cfg.with_overrides(generator=parse_generator(overrides["generator"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def parse_generator(values) -> np.ndarray:
    values = np.asarray(values, dtype=float).ravel()
    if values.size != 16:
        raise ConfigError(f"generator needs 16 numbers in row-major order, got {values.size}")
    return values.reshape(4, 4)


def load_run_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be a mapping, got {type(raw).__name__}")
    unknown = set(raw) - TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for section in ("env", "ppo"):
        if section in raw and not isinstance(raw[section], dict):
            raise ConfigError(f"{section} section must be a mapping")
    cfg = RunConfig(**raw)
    cfg.env_config()  # validate eagerly
    cfg.ppo_config()
    return cfg


def dump_run_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True)
