import math

import numpy as np
import pytest

from adaptive_dropout import harness
from adaptive_dropout.accounting import EpochLedger
from adaptive_dropout.config import DatasetSpec, ExperimentConfig, ModelSpec, OptimSpec
from adaptive_dropout.controllers import Controller
from adaptive_dropout.core import ConfigError, ControllerConfig, Feedback
from adaptive_dropout.harness import (
    CompareRow,
    TrainingDiverged,
    compare,
    matched_ablation,
    matched_baseline,
    matched_fractions,
    pareto_flags,
    read_trace,
    run_experiment,
)
from adaptive_dropout.schedules import base_trajectory


def small(variant="adaptive_t", epochs=8, **ctrl):
    return ExperimentConfig(
        dataset=DatasetSpec("blobs", n=120, dim=2, n_classes=3, noise=1.5, seed=0),
        model=ModelSpec("softmax_regression"),
        optim=OptimSpec(0.1, 0.9),
        controller=ControllerConfig(variant=variant, total_epochs=epochs, **ctrl),
        batch_size=16,
    )


def test_full_baseline_ee_equals_epochs():
    result = run_experiment(small("full_baseline", 7))
    assert result.summary.effective_epochs == 7.0
    assert result.summary.forward_epochs == 8


def test_outputs_written(tmp_path):
    result = run_experiment(small("adaptive_alpha"), output_dir=tmp_path)
    rows = read_trace(tmp_path / "trace.csv")
    assert len(rows) == 8
    assert rows[0]["alpha"] != "" and float(rows[-1]["cumulative_ee"]) == result.summary.effective_epochs
    summary = (tmp_path / "summary.json").read_text()
    for key in ("final_accuracy_full", "best_accuracy_full", "effective_epochs", "forward_epochs",
                "n_reheats", "n_rejections", "wall_seconds"):
        assert key in summary


def test_trace_consistency():
    result = run_experiment(small("adaptive_t", 15))
    n = 120
    prev_ee = 0.0
    for rec in result.records:
        assert rec.subset_size == max(1, math.floor(rec.keep_fraction * n + 0.5))
        assert rec.cumulative_ee == pytest.approx(prev_ee + rec.subset_size / n, abs=1e-12)
        prev_ee = rec.cumulative_ee
    assert result.records[-1].subset_size == n
    assert result.summary.n_reheats <= result.summary.n_rejections


def test_improving_run_tracks_base(monkeypatch):
    real = harness.evaluate
    calls = {"k": 0}

    def rising(model, dataset):
        _, loss, correct = real(model, dataset)
        calls["k"] += 1
        return min(1.0, 0.1 + 0.02 * calls["k"]), loss, correct

    monkeypatch.setattr(harness, "evaluate", rising)
    cfg = small("adaptive_t", 20, delta_threshold=0.01)
    result = run_experiment(cfg)
    for rec in result.records[:-1]:
        assert rec.keep_fraction == base_trajectory(cfg.controller, rec.epoch)
        assert not rec.reheated


def test_fixed_pdd_ee_against_geometric_sum():
    cfg = ControllerConfig(variant="fixed_pdd", pdd_ratio=0.7, f_floor=0.05, total_epochs=30)
    # epochs 1..9 geometric, 10..29 on the floor, 30 is the revision pass
    m = math.ceil(math.log(0.05) / math.log(0.7))
    closed = (1 - 0.7**m) / (1 - 0.7) + (29 - m) * 0.05 + 1.0
    ctrl, state, ledger = Controller(cfg), None, EpochLedger(10**8)
    state = ctrl.initial_state()
    for _ in range(30):
        state, d = ctrl.begin_epoch(state, None, 10**8, None)
        ledger = ledger.append(d.subset_size)
    assert float(ledger.exact) == pytest.approx(closed, abs=1e-12)
    # a trained run at small N deviates only by per-epoch rounding
    run = run_experiment(small("fixed_pdd", 30, pdd_ratio=0.7, f_floor=0.05))
    assert abs(run.summary.effective_epochs - closed) <= 30 * 0.5 / 120


def test_matched_fractions():
    assert matched_fractions(3.0) == [1.0, 1.0, 1.0]
    assert matched_fractions(2.5) == [1.0, 1.0, 0.5]
    with pytest.raises(ValueError):
        matched_fractions(0.0)


@pytest.mark.parametrize("target,sizes", [(3.0, [120] * 3), (2.5, [120, 120, 60])])
def test_matched_baseline_examples(target, sizes):
    result = matched_baseline(small(), target)
    assert [r.subset_size for r in result.records] == sizes
    assert result.summary.effective_epochs == target


def test_matched_baseline_table_value():
    result = matched_baseline(small(), 23.9)
    assert abs(result.summary.effective_epochs - 23.9) <= 1 / 120


def test_matched_ablation_table(tmp_path):
    rows = matched_ablation([small("adaptive_t", 10), small("adaptive_alpha", 10)], output_dir=tmp_path)
    assert [r.variant for r in rows] == ["adaptive_t", "adaptive_alpha"]
    for r in rows:
        assert abs(r.matched_effective_epochs - r.effective_epochs) <= 1 / 120
    lines = (tmp_path / "matched.csv").read_text().splitlines()
    assert lines[0] == "variant,effective_epochs,matched_effective_epochs,baseline_accuracy,accuracy"
    assert len(lines) == 3


def row(name, acc, ee):
    return CompareRow(name, acc, 0.0, ee, 0.0, 1)


def test_pareto_single_and_pair():
    assert pareto_flags([row("a", 0.5, 3)])[0].dominant
    flagged = pareto_flags([row("a", 0.9, 2), row("b", 0.8, 5)])
    assert [r.dominant for r in flagged] == [True, False]
    # equal accuracy is not domination
    assert all(r.dominant for r in pareto_flags([row("a", 0.9, 2), row("b", 0.9, 5)]))


def test_compare_runs_and_sorts(tmp_path):
    rows = compare([small("full_baseline"), small("adaptive_t")], seeds=[0, 1], output_dir=tmp_path)
    assert [r.method for r in rows] == ["adaptive_t", "full_baseline"]
    assert rows[0].effective_epochs < rows[1].effective_epochs == 8.0
    assert rows[0].n_seeds == 2
    text = (tmp_path / "pareto.csv").read_text().splitlines()
    assert text[0] == "method,accuracy,accuracy_std,effective_epochs,effective_epochs_std,n_seeds,pareto_dominant"
    assert (tmp_path / "01_adaptive_t" / "seed_1" / "trace.csv").exists()


def test_compare_parallel_matches_serial():
    cfgs = [small("full_baseline", 4), small("adaptive_alpha", 4)]
    assert compare(cfgs, seeds=[0, 1], jobs=2) == compare(cfgs, seeds=[0, 1])


def test_compare_rejects_mismatched_datasets():
    other = small()
    other = ExperimentConfig(dataset=DatasetSpec("spirals", n=100), controller=other.controller)
    with pytest.raises(ConfigError):
        compare([small(), other], seeds=[0])


def test_same_seed_identical_trace(tmp_path):
    run_experiment(small("adaptive_alpha", 10), output_dir=tmp_path / "a")
    run_experiment(small("adaptive_alpha", 10), output_dir=tmp_path / "b")
    assert (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()


def test_divergence_keeps_partial_trace(tmp_path):
    (tmp_path / "huge.csv").write_text("label,f0\n0,1e300\n1,-1e300\n0,2e300\n1,-3e300\n")
    cfg = ExperimentConfig(
        dataset=DatasetSpec("csv", path=str(tmp_path / "huge.csv")),
        model=ModelSpec("softmax_regression"),
        optim=OptimSpec(1.0, 0.0),
        controller=ControllerConfig(variant="full_baseline", total_epochs=5),
        batch_size=2,
    )
    with pytest.raises(TrainingDiverged) as err:
        run_experiment(cfg, output_dir=tmp_path / "out")
    assert err.value.trace_path.exists()
