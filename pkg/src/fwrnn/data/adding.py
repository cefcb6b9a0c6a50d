"""The adding problem.

Each sequence has two channels over ``steps`` time steps. Channel 0 holds
uniform [0, 1) values; channel 1 is zero except for a single 1 in the first
half ``[0, steps // 2)`` and a single 1 in the second half. The default target
is the sum of the two marked values. ``label_mode="interval"`` instead sums
channel 0 over the whole marked range ``[i1, i2]`` inclusive.

Binary cache layout (little-endian)::

    b"FWADD001", n uint64, steps uint64, seed uint64, mode uint8 (0 pair, 1 interval),
    inputs float64 (n, steps, 2) row-major, targets float64 (n,)
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..models import SequenceBatch
from ..numerics import Rng, derive_seed
from .base import DataError, Dataset

LABEL_MODES = ("pair", "interval")
_CACHE_MAGIC = b"FWADD001"


def gen_adding_task(n: int, steps: int, rng: Rng, label_mode: str = "pair") -> SequenceBatch:
    if steps < 2:
        raise ValueError(f"the adding task needs at least 2 steps, got {steps}")
    if label_mode not in LABEL_MODES:
        raise ValueError(f"label_mode must be one of {LABEL_MODES}")
    half = steps // 2
    values = rng.uniform((n, steps))
    first = rng.integers(0, half, n)
    second = rng.integers(half, steps, n)
    marks = np.zeros((n, steps))
    rows = np.arange(n)
    marks[rows, first] = 1.0
    marks[rows, second] = 1.0
    if label_mode == "pair":
        targets = values[rows, first] + values[rows, second]
    else:
        pos = np.arange(steps)
        inside = (pos >= first[:, None]) & (pos <= second[:, None])
        targets = np.where(inside, values, 0.0).sum(axis=1)
    return SequenceBatch(np.stack([values, marks], axis=2), targets, "regression")


def adding_dataset(n_train: int, n_test: int, steps: int, seed: int, label_mode: str = "pair") -> Dataset:
    train = gen_adding_task(n_train, steps, Rng(derive_seed(seed, "adding", "train")), label_mode)
    test = gen_adding_task(n_test, steps, Rng(derive_seed(seed, "adding", "test")), label_mode)
    meta = {"steps": steps, "label_mode": label_mode, "n_train": n_train, "n_test": n_test}
    return Dataset("adding", train, test, meta=meta)


def save_adding_cache(batch: SequenceBatch, seed: int, label_mode: str, path) -> None:
    n, steps, _ = batch.inputs.shape
    header = _CACHE_MAGIC + struct.pack("<QQQB", n, steps, seed & (2**64 - 1), LABEL_MODES.index(label_mode))
    body = np.ascontiguousarray(batch.inputs, "<f8").tobytes() + np.ascontiguousarray(batch.targets, "<f8").tobytes()
    Path(path).write_bytes(header + body)


def load_adding_cache(path):
    """Return ``(batch, seed, label_mode)`` from a cache written by :func:`save_adding_cache`."""
    data = Path(path).read_bytes()
    if data[:8] != _CACHE_MAGIC:
        raise DataError(f"{path} is not an adding-task cache")
    n, steps, seed, mode = struct.unpack_from("<QQQB", data, 8)
    pos = 8 + struct.calcsize("<QQQB")
    need = pos + 8 * (n * steps * 2 + n)
    if len(data) != need:
        raise DataError(f"{path}: expected {need} bytes, found {len(data)}")
    inputs = np.frombuffer(data, "<f8", n * steps * 2, pos).reshape(n, steps, 2).astype(np.float64)
    targets = np.frombuffer(data, "<f8", n, pos + 8 * n * steps * 2).astype(np.float64)
    return SequenceBatch(inputs, targets, "regression"), seed, LABEL_MODES[mode]
