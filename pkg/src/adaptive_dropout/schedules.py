"""Keep-fraction families, all pinned to 1 at the first epoch."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import FAMILIES, ControllerConfig


@dataclass(frozen=True)
class DecayFamily:
    kind: str
    alpha: float
    f_floor: float = 0.05

    def __post_init__(self):
        if self.kind not in FAMILIES:
            raise ValueError(f"unknown decay family {self.kind!r}")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 0.0 < self.f_floor < 1.0:
            raise ValueError("f_floor must lie in (0, 1)")


def _raw(kind: str, alpha: float, t: int) -> float:
    if kind == "exponential":
        return math.exp(-alpha * (t - 1))
    if kind == "inverse_linear":
        return 1.0 / (1.0 + alpha * (t - 1))
    return 1.0 - alpha * math.log(t)


def decay_fraction(family: DecayFamily, t: int) -> float:
    if t < 1:
        raise ValueError("epochs are 1-based")
    return max(family.f_floor, min(1.0, _raw(family.kind, family.alpha, t)))


def base_trajectory(config: ControllerConfig, t: int) -> float:
    """Adaptive-T reference curve; alpha stays at ``alpha_init`` forever."""
    return decay_fraction(DecayFamily(config.family, config.alpha_init, config.f_floor), t)


def pdd_fraction(config: ControllerConfig, t: int) -> float:
    """Feedback-blind geometric schedule used as the static baseline."""
    if t < 1:
        raise ValueError("epochs are 1-based")
    return max(config.f_floor, config.pdd_ratio ** (t - 1))
