"""Two-class human activity recognition (HAR-2) from the UCI HAR raw signals.

Expects the UCI "UCI HAR Dataset" tree either at ``path`` or at
``path/"UCI HAR Dataset"``::

    train/Inertial Signals/<channel>_train.txt   (7352 rows x 128 values)
    train/y_train.txt
    test/Inertial Signals/<channel>_test.txt     (2947 rows x 128 values)
    test/y_test.txt

Activities 1-3 (walking, walking upstairs, walking downstairs) become class 1
and activities 4-6 (sitting, standing, laying) class 0. Each of the nine
channels is standardised with its own train mean and std.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from ..models import SequenceBatch
from ..numerics import Rng
from .base import TABLE_SHAPES, DataError, Dataset, standardize

CHANNELS = (
    "body_acc_x", "body_acc_y", "body_acc_z",
    "body_gyro_x", "body_gyro_y", "body_gyro_z",
    "total_acc_x", "total_acc_y", "total_acc_z",
)
MOVING = (1, 2, 3)
STATIC = (4, 5, 6)


def _root(path) -> Path:
    p = Path(path)
    for cand in (p, p / "UCI HAR Dataset", p / "har", p / "har" / "UCI HAR Dataset"):
        if (cand / "train" / "Inertial Signals").is_dir():
            return cand
    raise DataError(f"no UCI HAR 'train/Inertial Signals' directory under {p}")


def _matrix(path: Path, rows: Optional[int], cols: Optional[int]) -> np.ndarray:
    if not path.is_file():
        raise DataError(f"missing HAR file {path}")
    text = path.read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    values = np.array(text.split(), dtype=np.float64)
    n = len(lines)
    if n == 0 or values.size % n:
        raise DataError(f"{path}: ragged or empty matrix")
    mat = values.reshape(n, -1)
    if rows is not None and mat.shape[0] != rows:
        raise DataError(f"{path}: {mat.shape[0]} rows, expected {rows}")
    if cols is not None and mat.shape[1] != cols:
        raise DataError(f"{path}: {mat.shape[1]} columns, expected {cols}")
    return mat


def _split(root: Path, split: str, rows: Optional[int], steps: Optional[int]) -> Tuple[np.ndarray, np.ndarray]:
    folder = root / split / "Inertial Signals"
    found = sorted(f.name for f in folder.glob(f"*_{split}.txt"))
    missing = [c for c in CHANNELS if f"{c}_{split}.txt" not in found]
    if missing:
        raise DataError(f"{folder}: missing channel files {missing}")
    chans = [_matrix(folder / f"{c}_{split}.txt", rows, steps) for c in CHANNELS]
    n = chans[0].shape[0]
    if any(c.shape != chans[0].shape for c in chans):
        raise DataError(f"{folder}: channel files disagree in shape")
    labels = _matrix(root / split / f"y_{split}.txt", n, 1).ravel().astype(np.int64)
    bad = set(np.unique(labels)) - set(MOVING + STATIC)
    if bad:
        raise DataError(f"y_{split}.txt contains unknown activity codes {sorted(bad)}")
    return np.stack(chans, axis=2), np.isin(labels, MOVING).astype(np.float64)


def load_har2(path, check_shapes: bool = True) -> Dataset:
    n_train, n_test, steps, _ = TABLE_SHAPES["har2"]
    if not check_shapes:
        n_train = n_test = steps = None
    root = _root(path)
    x_tr, y_tr = _split(root, "train", n_train, steps)
    x_te, y_te = _split(root, "test", n_test, steps)
    x_tr, (x_te,), mean, std = standardize(x_tr, [x_te], axis=(0, 1))
    meta = {
        "channels": list(CHANNELS),
        "class1_activities": list(MOVING),
        "class0_activities": list(STATIC),
        "normalization": "per-channel",
        "channel_mean": mean.tolist(),
        "channel_std": std.tolist(),
    }
    return Dataset("har2", SequenceBatch(x_tr, y_tr, "binary"), SequenceBatch(x_te, y_te, "binary"), meta=meta)


def add_gaussian_noise(batch: SequenceBatch, variance: float, rng: Rng) -> SequenceBatch:
    """Add i.i.d. N(0, variance) to every input entry; targets are left as they are."""
    if variance < 0:
        raise ValueError(f"noise variance must be >= 0, got {variance}")
    if variance == 0:
        return batch
    noise = rng.normal(batch.inputs.shape, 0.0, float(np.sqrt(variance)))
    return batch.with_inputs(batch.inputs + noise)


def noisy_har2(base: Dataset, variance: float, rng: Rng) -> Dataset:
    """Noise is drawn once here, so the noisy dataset is fixed for a given seed."""
    train = add_gaussian_noise(base.train, variance, rng.split("train"))
    test = add_gaussian_noise(base.test, variance, rng.split("test"))
    meta = dict(base.meta, noise_variance=variance, noise_seed=rng.seed)
    return Dataset("noisy-har2", train, test, meta=meta)
