"""Datasets: synthetic generators plus IDX and CSV loaders."""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sampling import Xoshiro256pp

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        x, y = self.features, self.labels
        if x.ndim != 2 or y.ndim != 1 or len(x) != len(y):
            raise ValueError("features must be (N, d) and labels (N,)")
        if len(y) < 1:
            raise ValueError("dataset is empty")
        if not np.all(np.isfinite(x)):
            raise ValueError("features contain non-finite values")
        if y.min() < 0 or y.max() >= self.n_classes:
            raise ValueError(f"labels must lie in [0, {self.n_classes})")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def restrict(self, indices) -> "Dataset":
        return Dataset(self.features[indices], self.labels[indices], self.n_classes)


def _balanced_labels(n: int, n_classes: int) -> np.ndarray:
    return np.arange(n, dtype=np.int64) % n_classes


def make_blobs(n: int, dim: int, n_classes: int, noise: float, rng: Xoshiro256pp) -> Dataset:
    """Isotropic Gaussian clusters around centres spaced 4 units apart.

    Centres are the scaled unit vectors ``±4 e_k``, which keeps every pair
    equidistant and linearly separable when ``noise`` is zero.
    """
    if n_classes > 2 * dim:
        raise ValueError(f"blobs supports at most 2*dim={2 * dim} classes")
    centres = np.zeros((n_classes, dim))
    for c in range(n_classes):
        centres[c, c // 2] = 4.0 if c % 2 == 0 else -4.0
    y = _balanced_labels(n, n_classes)
    x = centres[y] + noise * rng.normal_array(n * dim).reshape(n, dim)
    return Dataset(x, y, n_classes)


def make_spirals(n: int, noise: float, rng: Xoshiro256pp, turns: float = 1.25) -> Dataset:
    """Two interleaved Archimedean spirals in the unit disc."""
    y = _balanced_labels(n, 2)
    r = 0.1 + 0.9 * rng.uniform_array(n)
    theta = 2.0 * math.pi * turns * r + math.pi * y
    x = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
    x += noise * rng.normal_array(2 * n).reshape(n, 2)
    return Dataset(x, y, 2)


def make_synthetic(
    kind: str,
    n: int,
    dim: int,
    n_classes: int,
    noise: float,
    rng: Xoshiro256pp,
) -> Dataset:
    if n < n_classes or n_classes < 2 or dim < 1:
        raise ValueError("need n >= n_classes >= 2 and dim >= 1")
    if noise < 0:
        raise ValueError("noise must be >= 0")
    if kind == "blobs":
        return make_blobs(n, dim, n_classes, noise, rng)
    if kind == "spirals":
        if dim != 2 or n_classes != 2:
            raise ValueError("spirals are two-class and two-dimensional")
        return make_spirals(n, noise, rng)
    raise ValueError(f"unknown synthetic dataset {kind!r}")


class IdxFormatError(ValueError):
    def __init__(self, message: str, path, offset: int):
        super().__init__(f"{path}: {message} (byte offset {offset})")
        self.path = path
        self.offset = offset


class IdxMagicError(IdxFormatError):
    pass


class IdxTruncatedError(IdxFormatError):
    pass


class IdxCountMismatchError(IdxFormatError):
    pass


def _read_idx(path, magic: int, n_dims: int) -> tuple[tuple[int, ...], bytes]:
    raw = Path(path).read_bytes()
    header = 4 + 4 * n_dims
    if len(raw) < 4:
        raise IdxTruncatedError("file shorter than the magic number", path, len(raw))
    (found,) = struct.unpack_from(">I", raw, 0)
    if found != magic:
        raise IdxMagicError(f"unsupported magic 0x{found:08x}, expected 0x{magic:08x}", path, 0)
    if len(raw) < header:
        raise IdxTruncatedError("truncated header", path, len(raw))
    dims = struct.unpack_from(f">{n_dims}I", raw, 4)
    size = math.prod(dims)
    if len(raw) < header + size:
        raise IdxTruncatedError(f"payload needs {size} bytes, found {len(raw) - header}", path, len(raw))
    return dims, raw[header:header + size]


def load_idx(images_path, labels_path) -> Dataset:
    """Unsigned-byte IDX image/label pair; pixels scaled to [0, 1], rows flattened."""
    (n_img, rows, cols), pixels = _read_idx(images_path, IDX_IMAGES_MAGIC, 3)
    (n_lab,), label_bytes = _read_idx(labels_path, IDX_LABELS_MAGIC, 1)
    if n_img != n_lab:
        raise IdxCountMismatchError(f"count mismatch: {n_img} images vs {n_lab} labels", labels_path, 4)
    x = np.frombuffer(pixels, dtype=np.uint8).reshape(n_img, rows * cols).astype(np.float64) / 255.0
    y = np.frombuffer(label_bytes, dtype=np.uint8).astype(np.int64)
    return Dataset(x, y, int(y.max()) + 1)


def write_idx(images: np.ndarray, labels: np.ndarray, images_path, labels_path) -> None:
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    n, rows, cols = images.shape
    Path(images_path).write_bytes(struct.pack(">4I", IDX_IMAGES_MAGIC, n, rows, cols) + images.tobytes())
    Path(labels_path).write_bytes(struct.pack(">2I", IDX_LABELS_MAGIC, len(labels)) + labels.tobytes())


def load_csv(path, n_classes: int | None = None) -> Dataset:
    """CSV with a header: a ``label`` column plus ``f0 .. f{d-1}``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or "label" not in header:
            raise ValueError(f"{path}: header must contain a 'label' column")
        feature_cols = [c for c in header if c != "label"]
        expected = [f"f{i}" for i in range(len(feature_cols))]
        if sorted(feature_cols, key=lambda c: int(c[1:]) if c[1:].isdigit() else -1) != expected:
            raise ValueError(f"{path}: feature columns must be f0..f{len(feature_cols) - 1}")
        label_at = header.index("label")
        order = [header.index(c) for c in expected]
        labels, rows = [], []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(f"{path}:{line_no}: expected {len(header)} fields, got {len(row)}")
            labels.append(int(row[label_at]))
            rows.append([float(row[i]) for i in order])
    y = np.asarray(labels, dtype=np.int64)
    x = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(expected))
    return Dataset(x, y, n_classes if n_classes is not None else int(y.max()) + 1)


def save_csv(dataset: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["label"] + [f"f{i}" for i in range(dataset.dim)])
        for label, row in zip(dataset.labels, dataset.features):
            writer.writerow([int(label)] + [format(float(v), ".17g") for v in row])
