"""Experiment configuration: JSON loading with strict keys and defaults.

The document has two nested sections, ``env`` and ``trainer``, plus the
top-level run controls. Every field is optional; an empty document yields
the full default configuration. Unknown keys are rejected.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .agents import ALGOS, TrainerConfig
from .env import ConfigError, EnvConfig
from .phy import PathLossModel, PhyConstants

_PHY_KEYS = tuple(f.name for f in fields(PhyConstants))
_PATHLOSS_KEYS = tuple(f.name for f in fields(PathLossModel))
_ENV_KEYS = tuple(f.name for f in fields(EnvConfig) if f.name not in ("constants", "path_loss"))
_TRAINER_KEYS = tuple(f.name for f in fields(TrainerConfig))
_TOP_KEYS = ("env", "trainer", "algo", "episodes", "n_runs", "base_seed", "out_dir")


@dataclass
class ExperimentConfig:
    """Full closure of one experiment: environment, trainer, run controls."""

    env: EnvConfig = field(default_factory=EnvConfig)
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    algo: str = "ddpg"
    episodes: int = 1000
    n_runs: int = 5
    base_seed: int = 0
    out_dir: str = "out"

    def validate(self) -> None:
        if self.algo not in ALGOS:
            raise ConfigError(f"algo must be one of {ALGOS}, got {self.algo!r}")
        if self.episodes < 1:
            raise ConfigError(f"episodes must be >= 1, got {self.episodes}")
        if self.n_runs < 1:
            raise ConfigError(f"n_runs must be >= 1, got {self.n_runs}")
        if not isinstance(self.base_seed, int) or self.base_seed < 0:
            raise ConfigError(f"base_seed must be a nonnegative integer, got {self.base_seed}")
        self.env.validate()
        try:
            self.trainer.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _check_keys(section: dict, allowed, where: str) -> None:
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _env_from_dict(doc: dict) -> EnvConfig:
    _check_keys(doc, _ENV_KEYS + _PHY_KEYS + _PATHLOSS_KEYS, "env section")
    try:
        constants = PhyConstants(**{k: doc[k] for k in _PHY_KEYS if k in doc})
        path_loss = PathLossModel(**{k: doc[k] for k in _PATHLOSS_KEYS if k in doc})
        env_kwargs = {k: doc[k] for k in _ENV_KEYS if k in doc}
        if "task_size_bits" in env_kwargs:
            env_kwargs["task_size_bits"] = tuple(env_kwargs["task_size_bits"])
        for name in ("distances_m", "rho", "arrival_rate", "p_max_offload_w",
                     "p_max_local_w", "w_energy", "w_queue"):
            if name in env_kwargs and isinstance(env_kwargs[name], list):
                env_kwargs[name] = tuple(env_kwargs[name])
        return EnvConfig(constants=constants, path_loss=path_loss, **env_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def config_from_dict(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError(f"top-level document must be an object, got {type(doc).__name__}")
    _check_keys(doc, _TOP_KEYS, "top level")
    env_doc = doc.get("env", {})
    trainer_doc = doc.get("trainer", {})
    if not isinstance(env_doc, dict) or not isinstance(trainer_doc, dict):
        raise ConfigError("env and trainer sections must be objects")
    _check_keys(trainer_doc, _TRAINER_KEYS, "trainer section")
    cfg = ExperimentConfig(
        env=_env_from_dict(env_doc),
        trainer=TrainerConfig(**trainer_doc),
        **{k: doc[k] for k in ("algo", "episodes", "n_runs", "base_seed", "out_dir") if k in doc},
    )
    cfg.validate()
    return cfg


def config_to_dict(cfg: ExperimentConfig) -> dict:
    env = cfg.env
    env_doc = {k: getattr(env.constants, k) for k in _PHY_KEYS}
    env_doc.update({k: getattr(env.path_loss, k) for k in _PATHLOSS_KEYS})
    for k in _ENV_KEYS:
        v = getattr(env, k)
        env_doc[k] = list(v) if isinstance(v, tuple) else v
    return {
        "env": env_doc,
        "trainer": asdict(cfg.trainer),
        "algo": cfg.algo,
        "episodes": cfg.episodes,
        "n_runs": cfg.n_runs,
        "base_seed": cfg.base_seed,
        "out_dir": cfg.out_dir,
    }


def load_config(path) -> ExperimentConfig:
    """Parse and validate a JSON experiment config; unset fields default."""
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: parse error at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    return config_from_dict(doc)


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(config_to_dict(cfg), f, indent=2)
        f.write("\n")
