"""
Run configuration for training and optimizer comparisons

Defines:
- Training hyper-parameters (defaults follow the GPT-2 style block:
  lr 1e-3 decaying to 0.1 * lr, wd 1e-2, betas (0.9, 0.95), momentum 0.95,
  500 warmup steps, clip 1.0)
- Output options for the CLI (path, csv|json)
- Compare settings (optimizers, seeds, loss targets, smoothing window)

Configs are JSON files parsed strictly: unknown keys are rejected.
MUDKIT_SEED, when set, overrides the seed of any loaded config.
"""

import json
import os
import re
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from errors import ConfigError

load_dotenv()

SEED_ENV = "MUDKIT_SEED"
OPTIMIZER_PATTERN = re.compile(r"^(adamw|muon|mud)(\d*)$")


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class ScheduleConfig(StrictModel):
    """Warmup + cosine schedule"""
    lr: float = Field(1e-3, gt=0.0)  # peak
    min_lr: float = Field(1e-4, ge=0.0)
    warmup_steps: int = Field(500, ge=0)

    @model_validator(mode="after")
    def _min_below_peak(self):
        if self.min_lr > self.lr:
            raise ValueError(f"min_lr ({self.min_lr}) must not exceed lr ({self.lr})")
        return self


class TrainConfig(StrictModel):
    """One training run"""
    task: Literal["matreg", "mlp"] = "matreg"
    optimizer: Literal["adamw", "muon", "mud"] = "mud"
    mud_passes: int = Field(1, ge=1)
    ns_iters: int = Field(5, ge=1)
    steps: int = Field(2000, ge=0)
    batch: int = Field(64, ge=1)
    seed: int = 1203
    schedule: ScheduleConfig = Field(default_factory=ScheduleConfig)
    weight_decay: float = Field(1e-2, ge=0.0)
    betas: Tuple[float, float] = (0.9, 0.95)
    beta_momentum: float = Field(0.95, gt=0.0, lt=1.0)
    eps: float = Field(1e-8, gt=0.0)
    clip: float = Field(1.0, ge=0.0)  # 0 disables clipping
    matrix_lr: Optional[float] = Field(None, gt=0.0)
    deny_prefixes: List[str] = Field(default_factory=list)
    # matreg: W is rows x cols
    rows: int = Field(32, ge=2)
    cols: int = Field(32, ge=2)
    # mlp
    inputs: int = Field(16, ge=1)
    hidden: int = Field(32, ge=1)
    classes: int = Field(4, ge=2)
    wall_clock: bool = True  # False writes elapsed_seconds as 0.0 for byte-stable output

    @field_validator("betas")
    @classmethod
    def _betas_in_range(cls, betas):
        for beta in betas:
            if not 0.0 < beta < 1.0:
                raise ValueError(f"betas must lie in (0, 1), got {betas}")
        return betas


class RunConfig(TrainConfig):
    """A training run plus where and how to write it"""
    output_path: Optional[str] = None
    format: Literal["csv", "json"] = "csv"


class CompareConfig(StrictModel):
    """Several optimizers over several seeds on one task"""
    base: TrainConfig = Field(default_factory=TrainConfig)
    optimizers: List[str] = Field(default_factory=lambda: ["adamw", "muon", "mud1"])
    seeds: List[int] = Field(default_factory=lambda: [1203, 3721, 7865])
    targets: List[float] = Field(default_factory=lambda: [1e-1, 1e-2])
    target_mode: Literal["relative", "absolute"] = "relative"
    smooth_window: int = Field(7, ge=1)
    workers: int = Field(1, ge=1)
    output_path: Optional[str] = None

    @field_validator("optimizers")
    @classmethod
    def _known_optimizers(cls, names):
        if not names:
            raise ValueError("optimizers must not be empty")
        for name in names:
            if not OPTIMIZER_PATTERN.match(name):
                raise ValueError(f"unknown optimizer '{name}' (adamw, muon[S], mud[P])")
        return names

    @field_validator("seeds")
    @classmethod
    def _some_seeds(cls, seeds):
        if not seeds:
            raise ValueError("seeds must not be empty")
        return seeds

    @field_validator("targets")
    @classmethod
    def _positive_targets(cls, targets):
        if not targets or any(t <= 0.0 for t in targets):
            raise ValueError(f"targets must be a non-empty list of positive losses, got {targets}")
        return targets


DEFAULT_TRAIN_CONFIG: Dict[str, Any] = TrainConfig().model_dump()


def get_default_run_config() -> RunConfig:
    """Get a fresh RunConfig holding the defaults"""
    return RunConfig(**DEFAULT_TRAIN_CONFIG)


def split_optimizer_name(name: str) -> Tuple[str, Optional[int]]:
    """'mud2' -> ('mud', 2), 'adamw' -> ('adamw', None)"""
    match = OPTIMIZER_PATTERN.match(name)
    if not match:
        raise ConfigError(f"unknown optimizer '{name}'")
    family, count = match.groups()
    return family, int(count) if count else None


def validate_run_config(config: Union[Dict, TrainConfig]) -> bool:
    """
    Validate a run configuration

    Args:
        config: Raw dict or model instance

    Returns:
        True if valid, raises ConfigError if invalid
    """
    if isinstance(config, dict):
        config = parse_config(RunConfig, config, "run config")
    if config.matrix_lr is not None and config.optimizer == "adamw":
        raise ConfigError("matrix_lr only applies to muon and mud")
    if config.deny_prefixes and config.optimizer == "adamw":
        raise ConfigError("deny_prefixes only applies to muon and mud")
    return True


def parse_config(model, data: Any, what: str):
    """Build a config model, turning validation failures into ConfigError"""
    if not isinstance(data, dict):
        raise ConfigError(f"{what} must be a JSON object")
    try:
        return model(**data)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"invalid {what}: {problems}") from e


def _read_json(path: Union[str, Path]) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from e


def env_seed() -> Optional[int]:
    """Seed from MUDKIT_SEED, None when unset or empty"""
    raw = os.getenv(SEED_ENV, "").strip()
    if not raw:
        return None
    try:
        return int(raw, 0)
    except ValueError as e:
        raise ConfigError(f"{SEED_ENV} must be an integer, got '{raw}'") from e


def apply_env_overrides(config: TrainConfig) -> TrainConfig:
    seed = env_seed()
    if seed is not None:
        config = config.model_copy(update={"seed": seed})
    return config


def load_run_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """Parse a run config JSON (defaults when path is None) and apply env overrides"""
    config = get_default_run_config() if path is None else parse_config(RunConfig, _read_json(path), "run config")
    return apply_env_overrides(config)


def load_compare_config(path: Optional[Union[str, Path]] = None) -> CompareConfig:
    """Parse a compare config JSON; MUDKIT_SEED replaces the seed list with that one seed"""
    config = CompareConfig() if path is None else parse_config(CompareConfig, _read_json(path), "compare config")
    seed = env_seed()
    if seed is not None:
        config = config.model_copy(update={"seeds": [seed]})
    return config
