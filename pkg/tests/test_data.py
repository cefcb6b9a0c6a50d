import gzip
import struct

import numpy as np
import pytest

from fwrnn.data import (DataError, DatasetSpec, add_gaussian_noise, adding_dataset, build_dataset,
                        gen_adding_task, load_adding_cache, load_har2, load_mnist_pixel, noisy_har2,
                        read_idx_images, read_idx_labels, save_adding_cache)
from fwrnn.data.har import CHANNELS
from fwrnn.data.mnist import fixed_permutation
from fwrnn.models import SequenceBatch
from fwrnn.numerics import Rng

# -- adding task -----------------------------------------------------------------


def test_adding_markers_one_per_half(rng):
    batch = gen_adding_task(500, 100, rng)
    marks = batch.inputs[:, :, 1]
    assert batch.inputs.shape == (500, 100, 2) and batch.task == "regression"
    assert np.all(marks.sum(axis=1) == 2.0)
    assert np.all(marks[:, :50].sum(axis=1) == 1.0) and np.all(marks[:, 50:].sum(axis=1) == 1.0)
    assert set(np.unique(marks)) <= {0.0, 1.0}


def test_adding_labels_are_marked_pair_sums(rng):
    batch = gen_adding_task(300, 11, rng)
    x, marks = batch.inputs[:, :, 0], batch.inputs[:, :, 1]
    np.testing.assert_array_equal(batch.targets, (x * marks).sum(axis=1))
    assert batch.targets.min() >= 0.0 and batch.targets.max() <= 2.0
    assert x.min() >= 0.0 and x.max() < 1.0


def test_adding_interval_label(rng):
    batch = gen_adding_task(50, 9, rng, label_mode="interval")
    for x, marks, y in zip(batch.inputs[:, :, 0], batch.inputs[:, :, 1], batch.targets):
        i1, i2 = np.flatnonzero(marks)
        assert y == pytest.approx(x[i1:i2 + 1].sum(), rel=1e-14)


def test_constant_predictor_mse_is_one_sixth():
    batch = gen_adding_task(100_000, 20, Rng(77))
    mse = float(np.mean((batch.targets - 1.0) ** 2))
    assert abs(mse - 1 / 6) < 0.01


def test_adding_errors_and_determinism():
    with pytest.raises(ValueError):
        gen_adding_task(3, 1, Rng(0))
    a, b = adding_dataset(20, 5, 10, seed=4), adding_dataset(20, 5, 10, seed=4)
    assert np.array_equal(a.train.inputs, b.train.inputs) and np.array_equal(a.test.targets, b.test.targets)
    assert not np.array_equal(a.train.inputs, adding_dataset(20, 5, 10, seed=5).train.inputs)


def test_adding_cache_round_trip(tmp_path, rng):
    batch = gen_adding_task(7, 12, rng, label_mode="interval")
    save_adding_cache(batch, 123, "interval", tmp_path / "c.bin")
    back, seed, mode = load_adding_cache(tmp_path / "c.bin")
    assert seed == 123 and mode == "interval"
    assert np.array_equal(back.inputs, batch.inputs) and np.array_equal(back.targets, batch.targets)
    raw = (tmp_path / "c.bin").read_bytes()
    (tmp_path / "bad.bin").write_bytes(raw[:-3])
    with pytest.raises(DataError):
        load_adding_cache(tmp_path / "bad.bin")
    (tmp_path / "magic.bin").write_bytes(b"XXXXXXXX" + raw[8:])
    with pytest.raises(DataError):
        load_adding_cache(tmp_path / "magic.bin")


# -- MNIST -------------------------------------------------------------------------


def write_idx(folder, stem, images, labels, gz=False):
    img = struct.pack(">IIII", 0x803, *images.shape) + images.astype(np.uint8).tobytes()
    lab = struct.pack(">II", 0x801, labels.size) + labels.astype(np.uint8).tobytes()
    for name, data in ((f"{stem}-images-idx3-ubyte", img), (f"{stem}-labels-idx1-ubyte", lab)):
        path = folder / (name + (".gz" if gz else ""))
        path.write_bytes(gzip.compress(data) if gz else data)


@pytest.fixture
def mnist_dir(tmp_path):
    rng = Rng(3)
    write_idx(tmp_path, "train", rng.integers(0, 256, (30, 28, 28)), rng.integers(0, 10, 30))
    write_idx(tmp_path, "t10k", rng.integers(0, 256, (8, 28, 28)), rng.integers(0, 10, 8), gz=True)
    return tmp_path


def test_mnist_shapes_and_normalization(mnist_dir):
    ds = load_mnist_pixel(mnist_dir, check_shapes=False)
    assert ds.train.inputs.shape == (30, 784, 1) and ds.test.inputs.shape == (8, 784, 1)
    assert ds.task == "multiclass" and ds.output_dim == 10
    assert abs(ds.train.inputs.mean()) < 1e-6 and abs(ds.train.inputs.var() - 1) < 1e-6


def test_mnist_row_major_flatten(mnist_dir):
    raw = read_idx_images(mnist_dir / "train-images-idx3-ubyte").astype(float)
    ds = load_mnist_pixel(mnist_dir, check_shapes=False)
    flat = raw.reshape(30, -1)
    expected = (flat - flat.mean()) / flat.std()
    np.testing.assert_allclose(ds.train.inputs[:, :, 0], expected, rtol=0, atol=1e-12)


def test_mnist_permutation_is_fixed_and_shared(mnist_dir):
    plain = load_mnist_pixel(mnist_dir, check_shapes=False)
    a = load_mnist_pixel(mnist_dir, permute=11, check_shapes=False)
    b = load_mnist_pixel(mnist_dir, permute=11, check_shapes=False)
    perm = fixed_permutation(784, 11)
    assert np.array_equal(a.train.inputs, b.train.inputs)
    np.testing.assert_allclose(a.train.inputs[:, :, 0], plain.train.inputs[:, perm, 0], atol=1e-12)
    np.testing.assert_allclose(a.test.inputs[:, :, 0], plain.test.inputs[:, perm, 0], atol=1e-12)
    assert not np.array_equal(perm, fixed_permutation(784, 12))


def test_mnist_downsample(mnist_dir):
    ds = load_mnist_pixel(mnist_dir, downsample=2, check_shapes=False)
    assert ds.train.inputs.shape == (30, 196, 1)


def test_mnist_shape_check_and_errors(mnist_dir, tmp_path_factory):
    with pytest.raises(DataError, match="expected 60000/10000"):
        load_mnist_pixel(mnist_dir)
    with pytest.raises(DataError, match="not found"):
        load_mnist_pixel(tmp_path_factory.mktemp("empty"))
    bad = mnist_dir / "train-labels-idx1-ubyte"
    bad.write_bytes(struct.pack(">II", 0x803, 1) + b"\x00")
    with pytest.raises(DataError, match="bad magic"):
        read_idx_labels(bad)
    short = mnist_dir / "train-images-idx3-ubyte"
    short.write_bytes(short.read_bytes()[:-5])
    with pytest.raises(DataError, match="expected"):
        read_idx_images(short)


# -- HAR ---------------------------------------------------------------------------


def write_har(root, n_train=12, n_test=6, steps=8, seed=0):
    rng = Rng(seed)
    base = root / "UCI HAR Dataset"
    for split, n in (("train", n_train), ("test", n_test)):
        sig = base / split / "Inertial Signals"
        sig.mkdir(parents=True)
        for i, ch in enumerate(CHANNELS):
            values = rng.normal((n, steps), mean=i, std=i + 1)
            (sig / f"{ch}_{split}.txt").write_text("\n".join(" ".join(f"{v:.8e}" for v in row) for row in values))
        labels = np.arange(n) % 6 + 1
        (base / split / f"y_{split}.txt").write_text("\n".join(str(v) for v in labels) + "\n")
    return root


def test_har_fixture_load(tmp_path):
    ds = load_har2(write_har(tmp_path), check_shapes=False)
    assert ds.train.inputs.shape == (12, 8, 9) and ds.test.inputs.shape == (6, 8, 9)
    assert ds.task == "binary" and ds.output_dim == 1
    np.testing.assert_array_equal(ds.train.targets, np.isin(np.arange(12) % 6 + 1, (1, 2, 3)).astype(float))
    assert set(np.unique(ds.test.targets)) == {0.0, 1.0}
    mean = ds.train.inputs.mean(axis=(0, 1))
    std = ds.train.inputs.std(axis=(0, 1))
    assert np.all(np.abs(mean) < 1e-6) and np.all(np.abs(std - 1) < 1e-6)
    assert ds.meta["normalization"] == "per-channel"


def test_har_errors(tmp_path):
    root = write_har(tmp_path)
    with pytest.raises(DataError, match="7352"):
        load_har2(root)
    (root / "UCI HAR Dataset" / "test" / "Inertial Signals" / "body_gyro_y_test.txt").unlink()
    with pytest.raises(DataError, match="body_gyro_y"):
        load_har2(root, check_shapes=False)
    with pytest.raises(DataError):
        load_har2(tmp_path / "nowhere")


def test_har_unknown_activity_code(tmp_path):
    root = write_har(tmp_path)
    (root / "UCI HAR Dataset" / "train" / "y_train.txt").write_text("\n".join(["7"] * 12))
    with pytest.raises(DataError, match="unknown activity"):
        load_har2(root, check_shapes=False)


# -- noise -------------------------------------------------------------------------


def test_zero_variance_noise_is_identity(rng):
    batch = gen_adding_task(10, 6, rng)
    out = add_gaussian_noise(batch, 0.0, Rng(1))
    assert np.array_equal(out.inputs, batch.inputs)
    with pytest.raises(ValueError):
        add_gaussian_noise(batch, -1.0, Rng(1))


def test_noise_statistics_and_labels():
    x = np.zeros((1000, 100, 10))
    y = np.arange(1000) % 2
    batch = SequenceBatch(x, y.astype(float), "binary")
    noisy = add_gaussian_noise(batch, 2.0, Rng(2024))
    diff = noisy.inputs - batch.inputs
    assert abs(diff.mean()) < 0.01 and abs(diff.var() - 2.0) < 0.02
    assert np.array_equal(noisy.targets, batch.targets)


def test_noisy_har_is_fixed_per_seed(tmp_path):
    base = load_har2(write_har(tmp_path), check_shapes=False)
    a, b = noisy_har2(base, 2.0, Rng(5)), noisy_har2(base, 2.0, Rng(5))
    assert np.array_equal(a.train.inputs, b.train.inputs) and np.array_equal(a.test.inputs, b.test.inputs)
    assert np.array_equal(a.train.targets, base.train.targets)
    assert not np.array_equal(a.train.inputs, noisy_har2(base, 2.0, Rng(6)).train.inputs)


# -- specs -------------------------------------------------------------------------


def test_build_dataset_validation_and_roots(tmp_path):
    with pytest.raises(ValueError, match="dataset.name"):
        build_dataset(DatasetSpec(name="imagenet"))
    with pytest.raises(DataError, match="dataset-root"):
        build_dataset(DatasetSpec(name="har2"))
    ds = build_dataset(DatasetSpec(n_train=40, n_test=5, steps=6, val_fraction=0.25), seed=3)
    assert ds.train.size == 30 and ds.val.size == 10


def test_validation_split_is_disjoint_and_seeded():
    ds = adding_dataset(50, 5, 4, seed=0)
    a = ds.split_validation(0.2, Rng(1))
    b = ds.split_validation(0.2, Rng(1))
    assert np.array_equal(a.val.inputs, b.val.inputs)
    rows = {tuple(r.ravel()) for r in a.train.inputs} | {tuple(r.ravel()) for r in a.val.inputs}
    assert len(rows) == 50
