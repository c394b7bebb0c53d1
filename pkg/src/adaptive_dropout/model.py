"""Small numpy classifiers with hand-written backprop.

Parameters live in one flat float64 vector. Layout is weights then bias for
each layer in order: softmax regression is ``W (d, C), b (C)``; the one
hidden-layer MLP is ``W1 (d, H), b1 (H), W2 (H, C), b2 (C)``. Weight blocks
are row-major.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .sampling import Xoshiro256pp

MODEL_KINDS = ("softmax_regression", "mlp1")
ACTIVATIONS = ("relu", "tanh")


class DivergenceError(FloatingPointError):
    """Loss or gradient became non-finite."""


@dataclass(frozen=True)
class Model:
    kind: str
    dim: int
    n_classes: int
    params: np.ndarray
    hidden_dim: int = 0
    activation: str = "tanh"

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        expected = n_parameters(self.kind, self.dim, self.n_classes, self.hidden_dim)
        if self.params.shape != (expected,):
            raise ValueError(f"expected {expected} parameters, got shape {self.params.shape}")

    def with_params(self, params: np.ndarray) -> "Model":
        return replace(self, params=params)

    def unpack(self) -> list[np.ndarray]:
        """Views into ``params``: [W, b] or [W1, b1, W2, b2]."""
        return _unpack(self.params, self._shapes())

    def _shapes(self) -> list[tuple[int, ...]]:
        d, c, h = self.dim, self.n_classes, self.hidden_dim
        if self.kind == "softmax_regression":
            return [(d, c), (c,)]
        return [(d, h), (h,), (h, c), (c,)]


def n_parameters(kind: str, dim: int, n_classes: int, hidden_dim: int = 0) -> int:
    if kind == "softmax_regression":
        return dim * n_classes + n_classes
    if hidden_dim < 1:
        raise ValueError("mlp1 needs hidden_dim >= 1")
    return dim * hidden_dim + hidden_dim + hidden_dim * n_classes + n_classes


def _unpack(flat: np.ndarray, shapes) -> list[np.ndarray]:
    out, pos = [], 0
    for shape in shapes:
        size = int(np.prod(shape))
        out.append(flat[pos:pos + size].reshape(shape))
        pos += size
    return out


def init_model(
    kind: str,
    dim: int,
    n_classes: int,
    rng: Xoshiro256pp,
    hidden_dim: int = 0,
    activation: str = "tanh",
) -> Model:
    """Zero output layer; Glorot-uniform hidden weights drawn from ``rng``."""
    params = np.zeros(n_parameters(kind, dim, n_classes, hidden_dim))
    model = Model(kind, dim, n_classes, params, hidden_dim, activation)
    if kind == "mlp1":
        w1 = model.unpack()[0]
        s = np.sqrt(6.0 / (dim + hidden_dim))
        w1[...] = rng.uniform_array(dim * hidden_dim, -s, s).reshape(dim, hidden_dim)
    return model


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    return np.tanh(z) if activation == "tanh" else np.maximum(z, 0.0)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def logits(model: Model, x: np.ndarray) -> np.ndarray:
    if model.kind == "softmax_regression":
        w, b = model.unpack()
        return x @ w + b
    w1, b1, w2, b2 = model.unpack()
    return _activate(x @ w1 + b1, model.activation) @ w2 + b2


def per_sample_loss(model: Model, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cross-entropy per row and a boolean vector of argmax-correct rows."""
    z = logits(model, x)
    logp = _log_softmax(z)
    loss = -logp[np.arange(len(y)), y]
    return loss, z.argmax(axis=1) == y


def loss_and_grad(model: Model, x: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over the rows of ``x`` and its gradient (flat)."""
    m = len(y)
    grad = np.zeros_like(model.params)
    parts = _unpack(grad, model._shapes())
    if model.kind == "softmax_regression":
        w, b = model.unpack()
        z = x @ w + b
        hidden = x
    else:
        w1, b1, w2, b2 = model.unpack()
        pre = x @ w1 + b1
        hidden = _activate(pre, model.activation)
        z = hidden @ w2 + b2
    logp = _log_softmax(z)
    loss = -logp[np.arange(m), y].mean()
    dz = np.exp(logp)
    dz[np.arange(m), y] -= 1.0
    dz /= m
    if model.kind == "softmax_regression":
        parts[0][...] = x.T @ dz
        parts[1][...] = dz.sum(axis=0)
    else:
        parts[2][...] = hidden.T @ dz
        parts[3][...] = dz.sum(axis=0)
        dh = dz @ w2.T
        if model.activation == "tanh":
            dpre = dh * (1.0 - hidden * hidden)
        else:
            dpre = dh * (pre > 0.0)
        parts[0][...] = x.T @ dpre
        parts[1][...] = dpre.sum(axis=0)
    return float(loss), grad


@dataclass(frozen=True)
class Optimizer:
    """Heavy-ball SGD: ``v = momentum*v + g + wd*p; p -= lr*v``."""

    learning_rate: float
    momentum: float = 0.0
    weight_decay: float = 0.0
    velocity: Optional[np.ndarray] = None
    kind: str = "sgd"

    def __post_init__(self):
        if self.kind != "sgd":
            raise ValueError("only plain SGD is supported")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")

    def step(self, params: np.ndarray, grad: np.ndarray) -> tuple[np.ndarray, "Optimizer"]:
        velocity = self.velocity if self.velocity is not None else np.zeros_like(params)
        if velocity.shape != params.shape:
            raise ValueError("velocity shape does not match parameters")
        g = grad + self.weight_decay * params if self.weight_decay else grad
        velocity = self.momentum * velocity + g
        return params - self.learning_rate * velocity, replace(self, velocity=velocity)
