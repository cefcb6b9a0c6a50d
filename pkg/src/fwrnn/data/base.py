from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..models import SequenceBatch
from ..numerics import Rng

# (train, test, steps, features) per named benchmark.
TABLE_SHAPES: Dict[str, Tuple[int, int, int, int]] = {
    "har2": (7352, 2947, 128, 9),
    "noisy-har2": (7352, 2947, 128, 9),
    "pixel-mnist": (60000, 10000, 784, 1),
    "permute-mnist": (60000, 10000, 784, 1),
}


class DataError(RuntimeError):
    """Missing, corrupt or wrongly sized dataset files."""


@dataclass
class Dataset:
    name: str
    train: SequenceBatch
    test: SequenceBatch
    val: Optional[SequenceBatch] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    @property
    def task(self) -> str:
        return self.train.task

    @property
    def output_dim(self) -> int:
        if self.task == "multiclass":
            return int(self.meta.get("n_classes", int(self.train.targets.max()) + 1))
        t = self.train.targets
        return 1 if t.ndim == 1 else t.shape[1]

    def split_validation(self, fraction: float, rng: Rng) -> "Dataset":
        """Hold out ``fraction`` of the training set (random, seeded) as validation data."""
        if fraction <= 0:
            return self
        if fraction >= 1:
            raise ValueError("validation fraction must be < 1")
        n = self.train.size
        n_val = max(1, int(round(n * fraction)))
        order = rng.permutation(n)
        val_idx, train_idx = np.sort(order[:n_val]), np.sort(order[n_val:])
        meta = dict(self.meta, val_fraction=fraction, n_val=n_val)
        return Dataset(self.name, self.train.take(train_idx), self.test, self.train.take(val_idx), meta)


def standardize(train: np.ndarray, others, axis):
    """Zero-mean unit-variance scaling with statistics taken from ``train`` over ``axis``."""
    mean = train.mean(axis=axis, keepdims=True)
    std = train.std(axis=axis, keepdims=True)
    std = np.where(std > 0, std, 1.0)
    return (train - mean) / std, [(o - mean) / std for o in others], mean.ravel(), std.ravel()
