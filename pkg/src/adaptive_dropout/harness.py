"""Experiment orchestration: single runs, matched-EE baselines, comparisons."""

from __future__ import annotations

import csv
import json
import logging
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .accounting import (
    TRACE_COLUMNS,
    EpochLedger,
    EpochMetrics,
    TraceRecord,
    effective_epochs,
    format_real,
    record_epoch,
)
from .config import ExperimentConfig
from .controllers import Controller
from .core import ConfigError, EpochDecision, ScheduleState, compute_feedback, subset_size
from .data import Dataset, load_csv, load_idx, make_synthetic
from .model import DivergenceError, Model, Optimizer, init_model
from .sampling import derive_stream, sample_subset
from .trainer import evaluate, train_epoch

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunSummary:
    final_accuracy_full: float
    best_accuracy_full: float
    effective_epochs: float
    forward_epochs: int
    n_reheats: int
    n_rejections: int
    wall_seconds: float


@dataclass
class RunResult:
    summary: RunSummary
    records: list[TraceRecord]
    trace_path: Optional[Path] = None
    summary_path: Optional[Path] = None


class TrainingDiverged(DivergenceError):
    def __init__(self, message: str, records: list[TraceRecord], trace_path: Optional[Path]):
        super().__init__(message)
        self.records = records
        self.trace_path = trace_path


def build_dataset(config: ExperimentConfig) -> Dataset:
    spec = config.dataset
    if spec.kind == "idx":
        return load_idx(spec.images, spec.labels)
    if spec.kind == "csv":
        return load_csv(spec.path)
    seed = config.master_seed if spec.seed is None else spec.seed
    return make_synthetic(spec.kind, spec.n, spec.dim, spec.n_classes, spec.noise, derive_stream(seed, "data"))


def build_model(config: ExperimentConfig, dataset: Dataset) -> Model:
    m = config.model
    return init_model(
        m.kind,
        dataset.dim,
        dataset.n_classes,
        derive_stream(config.master_seed, "init"),
        hidden_dim=m.hidden_dim if m.kind == "mlp1" else 0,
        activation=m.activation,
    )


class FixedSizeSchedule:
    """Feedback-blind schedule with explicit per-epoch keep-fractions."""

    def __init__(self, fractions: Sequence[float]):
        self.fractions = list(fractions)

    def initial_state(self) -> ScheduleState:
        return ScheduleState(epoch=0, alpha=1.0, keep_fraction=1.0, t0=1.0)

    def begin_epoch(self, state, feedback, n, rng):
        t = state.epoch + 1
        f = self.fractions[t - 1]
        return replace(state, epoch=t, keep_fraction=f), EpochDecision(t, f, subset_size(f, n))


def write_trace(records: Sequence[TraceRecord], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for rec in records:
            writer.writerow(rec.csv_fields())


def read_trace(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _epoch_loop(
    config: ExperimentConfig,
    dataset: Dataset,
    controller,
    total_epochs: int,
    output_dir: Optional[Path],
) -> RunResult:
    started = time.perf_counter()
    seed = config.master_seed
    n = dataset.n
    model = build_model(config, dataset)
    optimizer = Optimizer(config.optim.learning_rate, config.optim.momentum, config.optim.weight_decay)
    track_alpha = getattr(controller, "config", None) is not None and controller.config.variant == "adaptive_alpha"

    trace_path = None
    if output_dir is not None:
        output_dir.mkdir(parents=True, exist_ok=True)
        trace_path = output_dir / "trace.csv"

    records: list[TraceRecord] = []
    ledger = EpochLedger(n)
    state = controller.initial_state()
    feedback = None
    try:
        acc_prev, _, _ = evaluate(model, dataset)
        for t in range(1, total_epochs + 1):
            state, decision = controller.begin_epoch(state, feedback, n, derive_stream(seed, "acceptance", t))
            sampler = derive_stream(seed, "sampling", t)
            subset = sample_subset(n, decision.subset_size, sampler)
            model, optimizer = train_epoch(model, dataset, subset, optimizer, config.batch_size, sampler)
            acc, loss, correct = evaluate(model, dataset)
            feedback = compute_feedback(acc, acc_prev, t)
            metrics = EpochMetrics(acc, float(correct[subset.indices].mean()), loss, feedback.delta)
            ledger, rec = record_epoch(ledger, decision, metrics, state.alpha if track_alpha else None)
            records.append(rec)
            acc_prev = acc
            log.debug("epoch %d keep=%.4f acc=%.4f ee=%.4f", t, decision.keep_fraction, acc, rec.cumulative_ee)
    except DivergenceError as exc:
        if trace_path is not None:
            write_trace(records, trace_path)
        raise TrainingDiverged(f"training diverged after {len(records)} epochs: {exc}", records, trace_path) from exc

    summary = RunSummary(
        final_accuracy_full=records[-1].accuracy_full,
        best_accuracy_full=max(r.accuracy_full for r in records),
        effective_epochs=effective_epochs(ledger),
        forward_epochs=total_epochs + 1,
        n_reheats=sum(r.reheated for r in records),
        n_rejections=sum(not r.accepted for r in records),
        wall_seconds=time.perf_counter() - started,
    )
    result = RunResult(summary, records, trace_path)
    if output_dir is not None:
        write_trace(records, trace_path)
        result.summary_path = output_dir / "summary.json"
        result.summary_path.write_text(json.dumps(asdict(summary), indent=2) + "\n")
    return result


def _resolve_dir(config: ExperimentConfig, output_dir) -> Optional[Path]:
    target = output_dir if output_dir is not None else config.output_dir
    return None if target is None else Path(target)


def run_experiment(
    config: ExperimentConfig,
    dataset: Optional[Dataset] = None,
    output_dir=None,
) -> RunResult:
    """Train under the configured controller; write ``trace.csv`` and ``summary.json``.

    ``output_dir`` overrides the config's; with neither set nothing is written.
    """
    dataset = build_dataset(config) if dataset is None else dataset
    controller = Controller(config.controller)
    return _epoch_loop(config, dataset, controller, config.total_epochs, _resolve_dir(config, output_dir))


def matched_fractions(target_ee: float) -> list[float]:
    """Whole full-data epochs followed by one partial epoch for the remainder."""
    if not target_ee > 0:
        raise ValueError("target_ee must be positive")
    whole = math.floor(target_ee)
    remainder = target_ee - whole
    fractions = [1.0] * whole
    if remainder > 0:
        fractions.append(remainder)
    return fractions


def matched_baseline(
    config: ExperimentConfig,
    target_ee: float,
    dataset: Optional[Dataset] = None,
    output_dir=None,
) -> RunResult:
    """Full-data training stopped at the given effective-epoch budget."""
    dataset = build_dataset(config) if dataset is None else dataset
    fractions = matched_fractions(target_ee)
    schedule = FixedSizeSchedule(fractions)
    return _epoch_loop(config, dataset, schedule, len(fractions), _resolve_dir(config, output_dir))


@dataclass(frozen=True)
class MatchedRow:
    variant: str
    effective_epochs: float
    matched_effective_epochs: float
    baseline_accuracy: float
    accuracy: float


MATCHED_COLUMNS = ("variant", "effective_epochs", "matched_effective_epochs", "baseline_accuracy", "accuracy")


def matched_ablation(configs: Sequence[ExperimentConfig], output_dir=None) -> list[MatchedRow]:
    """Pair each run with a full-data baseline trained to the same EE."""
    rows = []
    out = None if output_dir is None else Path(output_dir)
    for i, cfg in enumerate(configs):
        dataset = build_dataset(cfg)
        sub = None if out is None else out / f"{i:02d}_{cfg.method}"
        run = run_experiment(cfg, dataset, output_dir=sub)
        base = matched_baseline(
            cfg, run.summary.effective_epochs, dataset, output_dir=None if sub is None else sub / "matched"
        )
        rows.append(
            MatchedRow(
                cfg.method,
                run.summary.effective_epochs,
                base.summary.effective_epochs,
                base.summary.final_accuracy_full,
                run.summary.final_accuracy_full,
            )
        )
    if out is not None:
        write_matched_table(rows, out / "matched.csv")
    return rows


def write_matched_table(rows: Sequence[MatchedRow], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MATCHED_COLUMNS)
        for r in rows:
            writer.writerow([
                r.variant,
                format_real(r.effective_epochs),
                format_real(r.matched_effective_epochs),
                format_real(r.baseline_accuracy),
                format_real(r.accuracy),
            ])


@dataclass(frozen=True)
class CompareRow:
    method: str
    accuracy: float
    accuracy_std: float
    effective_epochs: float
    effective_epochs_std: float
    n_seeds: int
    dominant: bool = False


COMPARE_COLUMNS = (
    "method",
    "accuracy",
    "accuracy_std",
    "effective_epochs",
    "effective_epochs_std",
    "n_seeds",
    "pareto_dominant",
)


def dominates(a: CompareRow, b: CompareRow) -> bool:
    """Strictly more accurate and strictly cheaper."""
    return a.accuracy > b.accuracy and a.effective_epochs < b.effective_epochs


def pareto_flags(rows: Sequence[CompareRow]) -> list[CompareRow]:
    """Flag every row that no other row dominates."""
    return [replace(r, dominant=not any(dominates(o, r) for o in rows if o is not r)) for r in rows]


def _run_summary(config: ExperimentConfig, output_dir) -> RunSummary:
    return run_experiment(config, output_dir=output_dir).summary


def compare(
    configs: Sequence[ExperimentConfig],
    seeds: Optional[Sequence[int]] = None,
    output_dir=None,
    jobs: int = 1,
) -> list[CompareRow]:
    """Run every config over ``seeds`` and tabulate accuracy against EE.

    Rows come back sorted by mean EE with Pareto-frontier rows flagged.
    """
    if not configs:
        raise ConfigError("compare needs at least one config")
    ref = configs[0].dataset
    for cfg in configs[1:]:
        if cfg.dataset != ref:
            raise ConfigError(f"config {cfg.method!r} uses different dataset settings")
    if seeds is None:
        seeds = [configs[0].master_seed + i for i in range(5)]
    seeds = list(seeds)
    out = None if output_dir is None else Path(output_dir)

    jobs_list = []
    for i, cfg in enumerate(configs):
        for s in seeds:
            sub = None if out is None else out / f"{i:02d}_{cfg.method}" / f"seed_{s}"
            jobs_list.append((cfg.with_seed(s), sub))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            summaries = list(pool.map(_run_summary, *zip(*jobs_list)))
    else:
        summaries = [_run_summary(c, d) for c, d in jobs_list]

    rows = []
    for i, cfg in enumerate(configs):
        chunk = summaries[i * len(seeds):(i + 1) * len(seeds)]
        accs = [s.final_accuracy_full for s in chunk]
        ees = [s.effective_epochs for s in chunk]
        rows.append(
            CompareRow(
                cfg.method,
                float(np.mean(accs)),
                statistics.pstdev(accs),
                float(np.mean(ees)),
                statistics.pstdev(ees),
                len(seeds),
            )
        )
    rows = sorted(pareto_flags(rows), key=lambda r: r.effective_epochs)
    if out is not None:
        write_compare_table(rows, out / "pareto.csv")
    return rows


def write_compare_table(rows: Sequence[CompareRow], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COMPARE_COLUMNS)
        for r in rows:
            writer.writerow([
                r.method,
                format_real(r.accuracy),
                format_real(r.accuracy_std),
                format_real(r.effective_epochs),
                format_real(r.effective_epochs_std),
                r.n_seeds,
                "true" if r.dominant else "false",
            ])
