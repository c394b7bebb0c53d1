"""Epoch-level training, evaluation and numerical diagnostics."""

from __future__ import annotations

import numpy as np

from .core import subset_size
from .data import Dataset
from .model import DivergenceError, Model, Optimizer, loss_and_grad, per_sample_loss
from .sampling import SubsetIndex, Xoshiro256pp, sample_subset


def evaluate(model: Model, dataset: Dataset) -> tuple[float, float, np.ndarray]:
    """Full forward pass: accuracy, mean loss and the per-sample correct mask."""
    with np.errstate(over="ignore", invalid="ignore"):
        loss, correct = per_sample_loss(model, dataset.features, dataset.labels)
    mean_loss = float(loss.mean())
    if not np.isfinite(mean_loss):
        raise DivergenceError("non-finite loss on full-data evaluation")
    return float(correct.mean()), mean_loss, correct


def forward_full(model: Model, dataset: Dataset) -> tuple[float, float]:
    acc, loss, _ = evaluate(model, dataset)
    return acc, loss


def train_epoch(
    model: Model,
    dataset: Dataset,
    subset: SubsetIndex,
    optimizer: Optimizer,
    batch_size: int,
    rng: Xoshiro256pp,
) -> tuple[Model, Optimizer]:
    """One shuffled minibatch pass over exactly the subset's samples."""
    if subset.n_total != dataset.n:
        raise ValueError("subset was drawn for a different dataset size")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    order = subset.indices.tolist()
    rng.shuffle(order)
    order = np.asarray(order, dtype=np.int64)
    params = model.params
    for start in range(0, len(order), batch_size):
        batch = order[start:start + batch_size]
        with np.errstate(over="ignore", invalid="ignore"):
            _, grad = loss_and_grad(model.with_params(params), dataset.features[batch], dataset.labels[batch])
        if not np.all(np.isfinite(grad)):
            raise DivergenceError(f"non-finite gradient in batch starting at position {start}")
        params, optimizer = optimizer.step(params, grad)
    return model.with_params(params), optimizer


def grad_check(model: Model, dataset: Dataset, epsilon: float = 1e-5) -> float:
    """Largest relative gap between central differences and the analytic gradient."""
    x, y = dataset.features, dataset.labels
    _, analytic = loss_and_grad(model, x, y)
    numeric = np.empty_like(analytic)
    probe = model.params.copy()
    for i in range(len(probe)):
        saved = probe[i]
        probe[i] = saved + epsilon
        up, _ = loss_and_grad(model.with_params(probe), x, y)
        probe[i] = saved - epsilon
        down, _ = loss_and_grad(model.with_params(probe), x, y)
        probe[i] = saved
        numeric[i] = (up - down) / (2.0 * epsilon)
    rel = np.abs(numeric - analytic) / (np.abs(numeric) + np.abs(analytic) + 1e-12)
    return float(rel.max())


def gradient_variance_probe(
    model: Model,
    dataset: Dataset,
    fraction: float,
    n_trials: int,
    rng: Xoshiro256pp,
) -> float:
    """Mean squared deviation of subset-mean gradients from the full gradient.

    Averaged over parameters and over ``n_trials`` subsets drawn without
    replacement, each of ``subset_size(fraction, N)`` samples.
    """
    if n_trials < 2:
        raise ValueError("n_trials must be >= 2")
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    full = SubsetIndex.full(dataset.n).indices
    _, g_full = loss_and_grad(model, dataset.features[full], dataset.labels[full])
    k = subset_size(fraction, dataset.n)
    total = 0.0
    for _ in range(n_trials):
        idx = sample_subset(dataset.n, k, rng).indices
        _, g = loss_and_grad(model, dataset.features[idx], dataset.labels[idx])
        total += float(np.mean((g - g_full) ** 2))
    return total / n_trials
