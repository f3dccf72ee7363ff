"""
Learning-rate schedule and global gradient clipping
"""

import math
from dataclasses import dataclass
from typing import Dict, Mapping

import numpy as np

from errors import ConfigError


@dataclass(frozen=True)
class Schedule:
    """Linear warmup to peak_lr, then cosine decay to min_lr at total_steps"""

    peak_lr: float = 1e-3
    min_lr: float = 1e-4
    warmup_steps: int = 500
    total_steps: int = 2000

    def __post_init__(self):
        if not self.peak_lr > 0.0:
            raise ConfigError(f"peak_lr must be > 0, got {self.peak_lr}")
        if not 0.0 <= self.min_lr <= self.peak_lr:
            raise ConfigError(f"min_lr must lie in [0, peak_lr], got {self.min_lr}")
        if self.total_steps < 1:
            raise ConfigError(f"total_steps must be >= 1, got {self.total_steps}")
        if not 0 <= self.warmup_steps < self.total_steps:
            raise ConfigError(
                f"warmup_steps must lie in [0, total_steps), got {self.warmup_steps} "
                f"with total_steps={self.total_steps}"
            )


def lr_at(schedule: Schedule, step: int) -> float:
    """
    Learning rate at a 0-based step

    Warmup uses (step + 1) / warmup so the first step already moves.
    """
    if not 0 <= step <= schedule.total_steps:
        raise ConfigError(f"step {step} outside [0, {schedule.total_steps}]")
    if step < schedule.warmup_steps:
        return schedule.peak_lr * (step + 1) / schedule.warmup_steps
    span = schedule.total_steps - schedule.warmup_steps
    phase = math.pi * (step - schedule.warmup_steps) / span
    return schedule.min_lr + 0.5 * (schedule.peak_lr - schedule.min_lr) * (1.0 + math.cos(phase))


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    """l2 norm of all gradients concatenated"""
    total = 0.0
    for g in grads.values():
        total += float(np.vdot(g, g))
    return math.sqrt(total)


def clip_global_norm(grads: Mapping[str, np.ndarray], max_norm: float) -> Dict[str, np.ndarray]:
    """
    Rescale gradients so their global l2 norm is at most max_norm

    Args:
        grads: Gradient arrays by parameter name
        max_norm: Positive clip threshold

    Returns:
        A new dict; the input arrays are left untouched
    """
    if not max_norm > 0.0:
        raise ConfigError(f"max_norm must be > 0, got {max_norm}")
    norm = global_norm(grads)
    if norm <= max_norm:
        return dict(grads)
    scale = max_norm / norm
    return {name: g * scale for name, g in grads.items()}
