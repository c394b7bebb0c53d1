"""Value types shared by the schedule controllers and the epoch loop."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Optional

VARIANTS = ("adaptive_alpha", "adaptive_t", "fixed_pdd", "full_baseline")
FAMILIES = ("exponential", "inverse_linear", "logarithmic")


class ConfigError(ValueError):
    """Invalid experiment or controller configuration."""


class ScheduleError(RuntimeError):
    """The epoch loop drove a controller outside its contract."""


@dataclass(frozen=True)
class Feedback:
    epoch: int
    acc_curr: float
    acc_prev: float
    delta: float


def compute_feedback(acc_curr: float, acc_prev: float, epoch: int) -> Feedback:
    """Accuracy change between consecutive full-data evaluations."""
    for name, value in (("acc_curr", acc_curr), ("acc_prev", acc_prev)):
        if not (0.0 <= value <= 1.0):
            raise ValueError(f"{name}={value!r} is not a fraction in [0, 1]")
    if epoch < 1:
        raise ValueError("feedback epochs are 1-based")
    return Feedback(epoch, float(acc_curr), float(acc_prev), float(acc_curr) - float(acc_prev))


def subset_size(keep_fraction: float, n: int) -> int:
    """Round half up, never below one sample."""
    return max(1, min(n, math.floor(keep_fraction * n + 0.5)))


@dataclass(frozen=True)
class ControllerConfig:
    variant: str = "adaptive_t"
    family: str = "logarithmic"
    alpha_init: float = 0.2
    alpha_min: float = 1e-3
    alpha_max: float = 10.0
    eta_up: float = 0.2
    eta_down: float = 0.2
    delta_threshold: float = 0.0
    gamma: float = 1.5
    tau: float = 0.02
    p0: float = 0.5
    f_floor: float = 0.05
    t0: float = 1.0
    total_epochs: int = 30
    pdd_ratio: float = 0.7

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown controller variant {self.variant!r}")
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown decay family {self.family!r}")
        if not self.gamma > 1.0:
            raise ConfigError("gamma must exceed 1")
        if not 0.0 < self.alpha_min <= self.alpha_init <= self.alpha_max:
            raise ConfigError("need 0 < alpha_min <= alpha_init <= alpha_max")
        for name in ("eta_up", "eta_down"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1)")
        if self.delta_threshold < 0:
            raise ConfigError("delta_threshold must be >= 0")
        if not self.tau > 0:
            raise ConfigError("tau must be positive")
        if not 0.0 < self.p0 <= 1.0:
            raise ConfigError("p0 must lie in (0, 1]")
        if not 0.0 < self.f_floor < 1.0:
            raise ConfigError("f_floor must lie in (0, 1)")
        if not self.f_floor < self.t0 <= 1.0:
            raise ConfigError("t0 must lie in (f_floor, 1]")
        if not 0.0 < self.pdd_ratio < 1.0:
            raise ConfigError("pdd_ratio must lie in (0, 1)")
        if int(self.total_epochs) != self.total_epochs or self.total_epochs < 1:
            raise ConfigError("total_epochs must be a positive integer")

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


@dataclass(frozen=True)
class ScheduleState:
    """Controller knobs after the most recent decision.

    ``epoch`` is the epoch the latest decision was issued for (0 before the
    first one). ``alpha`` only moves under Adaptive-alpha and
    ``keep_fraction`` only under Adaptive-T; both are carried for every
    variant so the trace schema stays uniform.
    """

    epoch: int
    alpha: float
    keep_fraction: float
    t0: float

    @classmethod
    def initial(cls, config: ControllerConfig) -> "ScheduleState":
        return cls(epoch=0, alpha=config.alpha_init, keep_fraction=config.t0, t0=config.t0)


@dataclass(frozen=True)
class EpochDecision:
    epoch: int
    keep_fraction: float
    subset_size: int
    accepted: bool = True
    reheated: bool = False
    is_revision: bool = False
    acceptance_probability: Optional[float] = field(default=None, compare=False)
