import struct

import numpy as np
import pytest

from adaptive_dropout.data import (
    IdxCountMismatchError,
    IdxMagicError,
    IdxTruncatedError,
    load_csv,
    load_idx,
    make_synthetic,
    save_csv,
    write_idx,
)
from adaptive_dropout.model import Optimizer, init_model
from adaptive_dropout.sampling import SubsetIndex, derive_stream
from adaptive_dropout.trainer import forward_full, train_epoch


def _write(path, data):
    path.write_bytes(data)
    return path


@pytest.fixture
def idx_pair(tmp_path):
    images = _write(tmp_path / "img.idx", struct.pack(">4I", 0x803, 2, 2, 2) + bytes([0, 255, 51, 102, 204, 0, 255, 153]))
    labels = _write(tmp_path / "lab.idx", struct.pack(">2I", 0x801, 2) + bytes([1, 0]))
    return images, labels


def test_idx_roundtrip(idx_pair):
    ds = load_idx(*idx_pair)
    np.testing.assert_array_equal(
        ds.features,
        np.array([[0.0, 1.0, 0.2, 0.4], [0.8, 0.0, 1.0, 0.6]]),
    )
    assert ds.labels.tolist() == [1, 0]
    assert ds.n_classes == 2


def test_idx_writer(tmp_path):
    imgs = np.arange(12, dtype=np.uint8).reshape(3, 2, 2)
    write_idx(imgs, [0, 1, 2], tmp_path / "i", tmp_path / "l")
    ds = load_idx(tmp_path / "i", tmp_path / "l")
    np.testing.assert_allclose(ds.features * 255, imgs.reshape(3, 4))


def test_idx_bad_magic(tmp_path, idx_pair):
    bad = _write(tmp_path / "bad.idx", struct.pack(">4I", 0x802, 2, 2, 2) + bytes(8))
    with pytest.raises(IdxMagicError, match="unsupported magic") as err:
        load_idx(bad, idx_pair[1])
    assert err.value.offset == 0


def test_idx_count_mismatch(tmp_path, idx_pair):
    images = _write(tmp_path / "img3.idx", struct.pack(">4I", 0x803, 3, 2, 2) + bytes(12))
    with pytest.raises(IdxCountMismatchError, match="count mismatch"):
        load_idx(images, idx_pair[1])


def test_idx_truncated(tmp_path, idx_pair):
    images = _write(tmp_path / "short.idx", struct.pack(">4I", 0x803, 2, 2, 2) + bytes(5))
    with pytest.raises(IdxTruncatedError) as err:
        load_idx(images, idx_pair[1])
    assert err.value.offset == 21
    with pytest.raises(IdxTruncatedError):
        load_idx(_write(tmp_path / "tiny", b"\x00\x00"), idx_pair[1])


def test_csv_roundtrip(tmp_path):
    ds = make_synthetic("blobs", 20, 3, 4, 0.5, derive_stream(1, "data"))
    save_csv(ds, tmp_path / "d.csv")
    back = load_csv(tmp_path / "d.csv")
    np.testing.assert_array_equal(back.features, ds.features)
    np.testing.assert_array_equal(back.labels, ds.labels)


def test_csv_column_order_free(tmp_path):
    (tmp_path / "d.csv").write_text("f1,label,f0\n2.0,1,1.0\n4.0,0,3.0\n")
    ds = load_csv(tmp_path / "d.csv")
    assert ds.features.tolist() == [[1.0, 2.0], [3.0, 4.0]]
    assert ds.labels.tolist() == [1, 0]


@pytest.mark.parametrize("text", ["f0,f1\n1,2\n", "label,f0,f2\n0,1,2\n", "label,f0\n0,1,2\n"])
def test_csv_bad(tmp_path, text):
    (tmp_path / "d.csv").write_text(text)
    with pytest.raises(ValueError):
        load_csv(tmp_path / "d.csv")


def test_spirals_balanced():
    ds = make_synthetic("spirals", 400, 2, 2, 0.05, derive_stream(0, "data"))
    assert np.bincount(ds.labels).tolist() == [200, 200]


def test_blobs_balanced_and_deterministic():
    a = make_synthetic("blobs", 101, 3, 5, 1.0, derive_stream(3, "data"))
    b = make_synthetic("blobs", 101, 3, 5, 1.0, derive_stream(3, "data"))
    assert np.array_equal(a.features, b.features) and np.array_equal(a.labels, b.labels)
    counts = np.bincount(a.labels)
    assert counts.max() - counts.min() <= 1


def test_noiseless_blobs_learnable():
    ds = make_synthetic("blobs", 40, 2, 2, 0.0, derive_stream(0, "data"))
    model = init_model("softmax_regression", 2, 2, derive_stream(0, "init"))
    opt = Optimizer(0.1)
    for epoch in range(5):
        model, opt = train_epoch(model, ds, SubsetIndex.full(ds.n), opt, 8, derive_stream(0, "sampling", epoch))
    assert forward_full(model, ds)[0] == 1.0


@pytest.mark.parametrize(
    "args",
    [("spirals", 10, 3, 2, 0.1), ("blobs", 1, 2, 2, 0.1), ("rings", 10, 2, 2, 0.1), ("blobs", 10, 1, 3, 0.1),
     ("blobs", 10, 2, 2, -1.0)],
)
def test_synthetic_invalid(args):
    with pytest.raises(ValueError):
        make_synthetic(*args, derive_stream(0, "data"))
