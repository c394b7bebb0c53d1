"""Schedule controllers: Adaptive-alpha, Adaptive-T and two static baselines.

Each step consumes the feedback measured after epoch ``t`` and issues the
decision for epoch ``t + 1``. The last epoch is always a full-data revision
pass whatever the controller would otherwise have chosen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from .core import (
    ControllerConfig,
    EpochDecision,
    Feedback,
    ScheduleError,
    ScheduleState,
    subset_size,
)
from .sampling import Xoshiro256pp
from .schedules import DecayFamily, base_trajectory, decay_fraction, pdd_fraction


@dataclass(frozen=True)
class AcceptanceOutcome:
    probability: float
    accepted: bool
    uniform_draw: float


def acceptance_probability(delta: float, tau: float, p0: float) -> float:
    if delta > 0:
        return 1.0
    return p0 * math.exp(delta / tau)


def accept(delta: float, tau: float, p0: float, rng: Xoshiro256pp) -> AcceptanceOutcome:
    """Metropolis-style acceptance of a non-improving update.

    Improvements are always accepted. Otherwise the probability decays
    exponentially with the size of the drop, starting from ``p0`` at a tie.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    p = acceptance_probability(delta, tau, p0)
    u = rng.random()
    return AcceptanceOutcome(p, u < p, u)


def _decision(config: ControllerConfig, epoch: int, fraction: float, n: int, **flags) -> EpochDecision:
    if epoch == config.total_epochs:
        return EpochDecision(epoch, 1.0, n, is_revision=True, **flags)
    return EpochDecision(epoch, fraction, subset_size(fraction, n), **flags)


def _next_epoch(state: ScheduleState, feedback: Feedback, config: ControllerConfig) -> int:
    if feedback.epoch != state.epoch:
        raise ScheduleError(f"feedback for epoch {feedback.epoch} applied to state at epoch {state.epoch}")
    nxt = state.epoch + 1
    if nxt > config.total_epochs:
        raise ScheduleError(f"epoch {nxt} beyond total_epochs={config.total_epochs}")
    return nxt


def adaptive_alpha_step(
    state: ScheduleState, feedback: Feedback, config: ControllerConfig, rng: Xoshiro256pp, n: int
) -> tuple[ScheduleState, EpochDecision]:
    nxt = _next_epoch(state, feedback, config)
    if feedback.delta > 0:
        outcome = None
        accepted = True
    else:
        outcome = accept(feedback.delta, config.tau, config.p0, rng)
        accepted = outcome.accepted
    if accepted:
        alpha = min(config.alpha_max, state.alpha * (1.0 + config.eta_up))
    else:
        alpha = max(config.alpha_min, state.alpha * (1.0 - config.eta_down))
    fraction = decay_fraction(DecayFamily(config.family, alpha, config.f_floor), nxt)
    decision = _decision(
        config, nxt, fraction, n,
        accepted=accepted,
        acceptance_probability=1.0 if outcome is None else outcome.probability,
    )
    return replace(state, epoch=nxt, alpha=alpha, keep_fraction=fraction), decision


def adaptive_t_step(
    state: ScheduleState, feedback: Feedback, config: ControllerConfig, rng: Xoshiro256pp, n: int
) -> tuple[ScheduleState, EpochDecision]:
    nxt = _next_epoch(state, feedback, config)
    outcome = None
    if feedback.delta > config.delta_threshold:
        accepted = True
    else:
        outcome = accept(feedback.delta, config.tau, config.p0, rng)
        accepted = outcome.accepted
    if accepted:
        fraction = min(state.t0, base_trajectory(config, nxt))
    else:
        fraction = min(state.t0, config.gamma * state.keep_fraction)
    decision = _decision(
        config, nxt, fraction, n,
        accepted=accepted,
        reheated=not accepted,
        acceptance_probability=1.0 if outcome is None else outcome.probability,
    )
    return replace(state, epoch=nxt, keep_fraction=fraction), decision


def fixed_pdd_step(state: ScheduleState, config: ControllerConfig, n: int) -> tuple[ScheduleState, EpochDecision]:
    nxt = state.epoch + 1
    if nxt > config.total_epochs:
        raise ScheduleError(f"epoch {nxt} beyond total_epochs={config.total_epochs}")
    fraction = pdd_fraction(config, nxt)
    return replace(state, epoch=nxt, keep_fraction=fraction), _decision(config, nxt, fraction, n)


class Controller:
    """Uniform ``begin_epoch`` driver over the four controller variants."""

    def __init__(self, config: ControllerConfig):
        self.config = config

    def initial_state(self) -> ScheduleState:
        return ScheduleState.initial(self.config)

    def begin_epoch(
        self,
        state: ScheduleState,
        feedback: Optional[Feedback],
        n: int,
        rng: Optional[Xoshiro256pp],
    ) -> tuple[ScheduleState, EpochDecision]:
        cfg = self.config
        if n < 1:
            raise ScheduleError("dataset must hold at least one sample")
        if state.epoch >= cfg.total_epochs:
            raise ScheduleError(f"epoch {state.epoch + 1} beyond total_epochs={cfg.total_epochs}")

        if cfg.variant == "full_baseline":
            nxt = state.epoch + 1
            return replace(state, epoch=nxt, keep_fraction=1.0), _decision(cfg, nxt, 1.0, n)
        if cfg.variant == "fixed_pdd":
            return fixed_pdd_step(state, cfg, n)

        if feedback is None:
            if state.epoch != 0:
                raise ScheduleError(f"missing feedback for epoch {state.epoch}")
            fraction = 1.0 if cfg.variant == "adaptive_alpha" else state.t0
            return replace(state, epoch=1, keep_fraction=fraction), _decision(cfg, 1, fraction, n)
        if rng is None:
            raise ScheduleError("adaptive controllers need an acceptance stream")
        if cfg.variant == "adaptive_alpha":
            return adaptive_alpha_step(state, feedback, cfg, rng, n)
        return adaptive_t_step(state, feedback, cfg, rng, n)
