"""Pixel-by-pixel MNIST from the standard IDX files.

Looks for ``train-images-idx3-ubyte``, ``train-labels-idx1-ubyte``,
``t10k-images-idx3-ubyte`` and ``t10k-labels-idx1-ubyte`` (optionally
gzipped) directly under ``path`` or under ``path/mnist``.
"""

from __future__ import annotations

import gzip
import struct
from pathlib import Path
from typing import Optional

import numpy as np

from ..models import SequenceBatch
from ..numerics import Rng
from .base import TABLE_SHAPES, DataError, Dataset, standardize

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


def _find(root: Path, stem: str) -> Path:
    for base in (root, root / "mnist", root / "MNIST" / "raw"):
        for name in (stem, stem + ".gz"):
            if (base / name).is_file():
                return base / name
    raise DataError(f"MNIST file {stem}[.gz] not found under {root}")


def _read(path: Path) -> bytes:
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        return fh.read()


def read_idx_images(path) -> np.ndarray:
    data = _read(Path(path))
    if len(data) < 16:
        raise DataError(f"{path}: truncated IDX header")
    magic, n, rows, cols = struct.unpack(">IIII", data[:16])
    if magic != IMAGES_MAGIC:
        raise DataError(f"{path}: bad magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}")
    if len(data) != 16 + n * rows * cols:
        raise DataError(f"{path}: expected {n * rows * cols} pixel bytes, found {len(data) - 16}")
    return np.frombuffer(data, np.uint8, offset=16).reshape(n, rows, cols)


def read_idx_labels(path) -> np.ndarray:
    data = _read(Path(path))
    if len(data) < 8:
        raise DataError(f"{path}: truncated IDX header")
    magic, n = struct.unpack(">II", data[:8])
    if magic != LABELS_MAGIC:
        raise DataError(f"{path}: bad magic {magic:#010x}, expected {LABELS_MAGIC:#010x}")
    if len(data) != 8 + n:
        raise DataError(f"{path}: expected {n} labels, found {len(data) - 8}")
    return np.frombuffer(data, np.uint8, offset=8).astype(np.int64)


def fixed_permutation(steps: int, seed: int) -> np.ndarray:
    return Rng(seed).permutation(steps)


def _downsample(images: np.ndarray, factor: int) -> np.ndarray:
    if factor == 1:
        return images.astype(np.float64)
    n, rows, cols = images.shape
    if rows % factor or cols % factor:
        raise ValueError(f"cannot downsample {rows}x{cols} images by {factor}")
    blocks = images.reshape(n, rows // factor, factor, cols // factor, factor).astype(np.float64)
    return blocks.mean(axis=(2, 4))


def load_mnist_pixel(path, permute: Optional[int] = None, downsample: int = 1,
                     check_shapes: bool = True) -> Dataset:
    """Train/test pixel sequences, standardised with the global train mean and std.

    ``permute`` is a seed: one permutation of the time axis is drawn from it and
    applied to every train and test sequence. ``downsample`` average-pools
    ``factor x factor`` blocks before flattening (2 gives 14x14, 196 steps).
    """
    root = Path(path)
    tr_x = read_idx_images(_find(root, FILES["train_images"]))
    tr_y = read_idx_labels(_find(root, FILES["train_labels"]))
    te_x = read_idx_images(_find(root, FILES["test_images"]))
    te_y = read_idx_labels(_find(root, FILES["test_labels"]))
    if tr_x.shape[0] != tr_y.shape[0] or te_x.shape[0] != te_y.shape[0]:
        raise DataError("MNIST image and label counts disagree")
    name = "permute-mnist" if permute is not None else "pixel-mnist"
    if check_shapes:
        n_train, n_test, steps, _ = TABLE_SHAPES[name]
        if (tr_x.shape[0], te_x.shape[0], tr_x.shape[1] * tr_x.shape[2]) != (n_train, n_test, steps):
            raise DataError(f"MNIST files hold {tr_x.shape[0]}/{te_x.shape[0]} images of "
                            f"{tr_x.shape[1]}x{tr_x.shape[2]}; expected {n_train}/{n_test} of 28x28")

    train = _downsample(tr_x, downsample).reshape(tr_x.shape[0], -1)
    test = _downsample(te_x, downsample).reshape(te_x.shape[0], -1)
    meta = {"downsample": downsample, "permute_seed": permute, "n_classes": 10}
    if permute is not None:
        perm = fixed_permutation(train.shape[1], permute)
        train, test = train[:, perm], test[:, perm]
        meta["permutation_head"] = perm[:8].tolist()
    train, (test,), mean, std = standardize(train, [test], axis=None)
    meta.update(mean=float(mean[0]), std=float(std[0]))
    return Dataset(name, SequenceBatch(train[:, :, None], tr_y, "multiclass"),
                   SequenceBatch(test[:, :, None], te_y, "multiclass"), meta=meta)
