"""Effective-epoch bookkeeping and per-epoch trace rows."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .core import EpochDecision, ScheduleError

TRACE_COLUMNS = (
    "epoch",
    "subset_size",
    "keep_fraction",
    "alpha",
    "accuracy_full",
    "accuracy_subset",
    "loss_full",
    "delta",
    "accepted",
    "reheated",
    "cumulative_ee",
)


@dataclass(frozen=True)
class EpochLedger:
    n_total: int
    sizes: tuple[int, ...] = ()

    def __post_init__(self):
        if self.n_total < 1:
            raise ValueError("n_total must be >= 1")
        for s in self.sizes:
            if not 1 <= s <= self.n_total:
                raise ScheduleError(f"subset size {s} outside [1, {self.n_total}]")

    def append(self, size: int) -> "EpochLedger":
        return EpochLedger(self.n_total, self.sizes + (int(size),))

    @property
    def exact(self) -> Fraction:
        return Fraction(sum(self.sizes), self.n_total)


def effective_epochs(ledger: EpochLedger) -> float:
    """Backpropagated samples over dataset size; summed in integers, divided once."""
    return float(ledger.exact)


@dataclass(frozen=True)
class EpochMetrics:
    accuracy_full: float
    accuracy_subset: float
    loss_full: float
    delta: float


@dataclass(frozen=True)
class TraceRecord:
    epoch: int
    subset_size: int
    keep_fraction: float
    alpha: Optional[float]
    accuracy_full: float
    accuracy_subset: float
    loss_full: float
    delta: float
    accepted: bool
    reheated: bool
    cumulative_ee: float

    def csv_fields(self) -> list[str]:
        return [
            str(self.epoch),
            str(self.subset_size),
            format_real(self.keep_fraction),
            "" if self.alpha is None else format_real(self.alpha),
            format_real(self.accuracy_full),
            format_real(self.accuracy_subset),
            format_real(self.loss_full),
            format_real(self.delta),
            "true" if self.accepted else "false",
            "true" if self.reheated else "false",
            format_real(self.cumulative_ee),
        ]


def format_real(x: float) -> str:
    return format(float(x), ".17g")


def record_epoch(
    ledger: EpochLedger,
    decision: EpochDecision,
    metrics: EpochMetrics,
    alpha: Optional[float] = None,
) -> tuple[EpochLedger, TraceRecord]:
    if decision.subset_size > ledger.n_total:
        raise ScheduleError(f"subset size {decision.subset_size} exceeds N={ledger.n_total}")
    ledger = ledger.append(decision.subset_size)
    record = TraceRecord(
        epoch=decision.epoch,
        subset_size=decision.subset_size,
        keep_fraction=decision.keep_fraction,
        alpha=alpha,
        accuracy_full=metrics.accuracy_full,
        accuracy_subset=metrics.accuracy_subset,
        loss_full=metrics.loss_full,
        delta=metrics.delta,
        accepted=decision.accepted,
        reheated=decision.reheated,
        cumulative_ee=effective_epochs(ledger),
    )
    return ledger, record
