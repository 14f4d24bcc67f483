"""Run configuration: a flat key=value file with sections.

Four sections, all optional, every key documented here once:

    [run]
    env = gridbuild            ; gridbuild | techlite
    mode = flying              ; builder movement: flying | walking
    dataset = data/train.jsonl ; instruction dataset (must exist)
    sampler = curriculum       ; task sampler: uniform | curriculum
    seeds = 1, 2, 3            ; at least one integer seed
    total_steps = 200000       ; env-step budget per seed
    eval_episodes = 40         ; episodes per evaluation pass
    out_dir = runs/demo        ; artifact directory (created on demand)

    [curriculum]               ; softmax task sampler knobs
    [reward]                   ; staged reward shaping knobs
    [ppo]                      ; optimizer and rollout knobs

Unknown sections or keys are errors, not silently ignored, and every
parse failure names the section and key it came from.
"""
from __future__ import annotations

import configparser
import dataclasses
import os

from .curriculum import CurriculumConfig
from .ppo import PPOConfig
from .taskman import RewardConfig


class ConfigError(ValueError):
    """Bad config file or field value; message names section and key."""


@dataclasses.dataclass
class RunConfig:
    env: str = "gridbuild"
    mode: str = "flying"
    dataset: str = ""
    sampler: str = "curriculum"
    seeds: tuple = (0,)
    total_steps: int = 200000
    eval_episodes: int = 40
    out_dir: str = "runs/out"
    curriculum: CurriculumConfig = dataclasses.field(default_factory=CurriculumConfig)
    reward: RewardConfig = dataclasses.field(default_factory=RewardConfig)
    ppo: PPOConfig = dataclasses.field(default_factory=PPOConfig)


_RUN_FIELDS = ("env", "mode", "dataset", "sampler", "seeds", "total_steps",
               "eval_episodes", "out_dir")
_SECTIONS = {
    "curriculum": CurriculumConfig,
    "reward": RewardConfig,
    "ppo": PPOConfig,
}


def _convert(section: str, key: str, text: str, kind: str):
    text = text.strip()
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "bool":
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        return text
    except ValueError:
        raise ConfigError(
            f"[{section}] {key}: expected {kind}, got {text!r}") from None


def _parse_seeds(text: str) -> tuple:
    parts = [p for p in text.replace(",", " ").split() if p]
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"[run] seeds: expected integers, got {text!r}") from None


def load_config(path) -> RunConfig:
    """Parse and validate; dataset path is resolved against the file's dir."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None

    cfg = RunConfig()
    field_kind = {f.name: f.type for f in dataclasses.fields(RunConfig)}
    for section in parser.sections():
        if section == "run":
            for key, text in parser.items("run"):
                if key not in _RUN_FIELDS:
                    raise ConfigError(f"[run] unknown key {key!r}")
                if key == "seeds":
                    cfg.seeds = _parse_seeds(text)
                else:
                    setattr(cfg, key, _convert("run", key, text, field_kind[key]))
        elif section in _SECTIONS:
            sub_cls = _SECTIONS[section]
            kinds = {f.name: f.type for f in dataclasses.fields(sub_cls)}
            sub = getattr(cfg, section)
            for key, text in parser.items(section):
                if key not in kinds:
                    raise ConfigError(f"[{section}] unknown key {key!r}")
                setattr(sub, key, _convert(section, key, text, kinds[key]))
        else:
            raise ConfigError(f"unknown section [{section}]")

    if cfg.dataset:
        cfg.dataset = os.path.normpath(
            os.path.join(os.path.dirname(os.path.abspath(path)), cfg.dataset))
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.env not in ("gridbuild", "techlite"):
        raise ConfigError(f"[run] env: expected gridbuild or techlite, got {cfg.env!r}")
    if cfg.mode not in ("flying", "walking"):
        raise ConfigError(f"[run] mode: expected flying or walking, got {cfg.mode!r}")
    if cfg.sampler not in ("uniform", "curriculum"):
        raise ConfigError(
            f"[run] sampler: expected uniform or curriculum, got {cfg.sampler!r}")
    if not cfg.seeds:
        raise ConfigError("[run] seeds: need at least one seed")
    if cfg.total_steps <= 0:
        raise ConfigError("[run] total_steps: must be positive")
    if cfg.eval_episodes <= 0:
        raise ConfigError("[run] eval_episodes: must be positive")
    if cfg.dataset and not os.path.exists(cfg.dataset):
        raise ConfigError(f"[run] dataset: no such file {cfg.dataset!r}")
    if cfg.reward.stage not in ("early", "late"):
        raise ConfigError(
            f"[reward] stage: expected early or late, got {cfg.reward.stage!r}")
    for key in ("learning_rate", "rollout_len", "batch_size", "epochs",
                "workers", "envs_per_worker", "hidden"):
        if getattr(cfg.ppo, key) <= 0:
            raise ConfigError(f"[ppo] {key}: must be positive")


def save_config(cfg: RunConfig, path) -> None:
    """Write back in the same sectioned format (helps artifact provenance)."""
    parser = configparser.ConfigParser()
    parser["run"] = {
        "env": cfg.env,
        "mode": cfg.mode,
        "dataset": cfg.dataset,
        "sampler": cfg.sampler,
        "seeds": ", ".join(str(s) for s in cfg.seeds),
        "total_steps": str(cfg.total_steps),
        "eval_episodes": str(cfg.eval_episodes),
        "out_dir": cfg.out_dir,
    }
    for section, _ in _SECTIONS.items():
        sub = getattr(cfg, section)
        parser[section] = {f.name: str(getattr(sub, f.name))
                           for f in dataclasses.fields(sub)}
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)
