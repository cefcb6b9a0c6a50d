"""Benchmark datasets: adding problem, pixel/permuted MNIST, HAR-2 and Noisy-HAR-2."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

from ..numerics import Rng, derive_seed
from .adding import adding_dataset, gen_adding_task, load_adding_cache, save_adding_cache
from .base import TABLE_SHAPES, DataError, Dataset
from .har import add_gaussian_noise, load_har2, noisy_har2
from .mnist import load_mnist_pixel, read_idx_images, read_idx_labels

DATASETS = ("adding", "pixel-mnist", "permute-mnist", "har2", "noisy-har2")

__all__ = [
    "DATASETS",
    "DataError",
    "Dataset",
    "DatasetSpec",
    "TABLE_SHAPES",
    "add_gaussian_noise",
    "adding_dataset",
    "build_dataset",
    "gen_adding_task",
    "load_adding_cache",
    "load_har2",
    "load_mnist_pixel",
    "noisy_har2",
    "read_idx_images",
    "read_idx_labels",
    "save_adding_cache",
]


@dataclass(frozen=True)
class DatasetSpec:
    """Which benchmark to build and how.

    ``steps``, ``n_train``, ``n_test`` and ``label_mode`` only apply to the
    adding task; ``downsample`` and ``permute_seed`` to MNIST;
    ``noise_variance`` to Noisy-HAR-2. ``seed`` of None means "use the run seed".
    """

    name: str = "adding"
    steps: int = 100
    n_train: int = 10000
    n_test: int = 1000
    label_mode: str = "pair"
    downsample: int = 1
    permute_seed: int = 0
    noise_variance: float = 2.0
    val_fraction: float = 0.0
    seed: Optional[int] = None

    def validate(self) -> List[str]:
        errors = []
        if self.name not in DATASETS:
            errors.append(f"dataset.name must be one of {DATASETS} (got {self.name!r})")
        if self.name == "adding":
            if self.steps < 2:
                errors.append("dataset.steps must be >= 2")
            if self.n_train < 1 or self.n_test < 1:
                errors.append("dataset.n_train and dataset.n_test must be >= 1")
            if self.label_mode not in ("pair", "interval"):
                errors.append("dataset.label_mode must be 'pair' or 'interval'")
        if self.downsample not in (1, 2, 4, 7, 14, 28):
            errors.append("dataset.downsample must divide 28")
        if self.noise_variance < 0:
            errors.append("dataset.noise_variance must be >= 0")
        if not 0 <= self.val_fraction < 1:
            errors.append("dataset.val_fraction must lie in [0, 1)")
        return errors


def build_dataset(spec: DatasetSpec, root=None, seed: int = 0) -> Dataset:
    """Materialise ``spec``; ``root`` is the directory holding MNIST / UCI HAR files."""
    errors = spec.validate()
    if errors:
        raise ValueError("; ".join(errors))
    seed = seed if spec.seed is None else spec.seed
    if spec.name == "adding":
        ds = adding_dataset(spec.n_train, spec.n_test, spec.steps, seed, spec.label_mode)
    else:
        if root is None:
            raise DataError(f"dataset {spec.name!r} needs --dataset-root (or FWRNN_DATASET_ROOT)")
        root = Path(root)
        if spec.name in ("pixel-mnist", "permute-mnist"):
            permute = spec.permute_seed if spec.name == "permute-mnist" else None
            ds = load_mnist_pixel(root, permute=permute, downsample=spec.downsample)
        else:
            ds = load_har2(root)
            if spec.name == "noisy-har2":
                ds = noisy_har2(ds, spec.noise_variance, Rng(derive_seed(seed, "noise")))
    if spec.val_fraction > 0:
        ds = ds.split_validation(spec.val_fraction, Rng(derive_seed(seed, "validation")))
    return ds
