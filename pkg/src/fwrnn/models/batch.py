from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import NonFiniteError, ShapeError

TASKS = ("regression", "binary", "multiclass")


@dataclass(frozen=True)
class SequenceBatch:
    """A minibatch of sequences.

    ``inputs`` is (batch, steps, features). ``targets`` holds class indices for
    ``multiclass``, {0, 1} labels for ``binary`` and real values for
    ``regression`` (either shape (batch,) or (batch, outputs)).
    """

    inputs: np.ndarray
    targets: np.ndarray
    task: str = "regression"

    def __post_init__(self):
        x = np.ascontiguousarray(self.inputs, dtype=np.float64)
        if x.ndim != 3:
            raise ShapeError(f"inputs must be (batch, steps, features), got shape {x.shape}")
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        y = np.asarray(self.targets)
        y = y.astype(np.int64) if self.task == "multiclass" else y.astype(np.float64)
        if y.shape[0] != x.shape[0]:
            raise ShapeError(f"{x.shape[0]} input sequences but {y.shape[0]} targets")
        if not np.all(np.isfinite(x)):
            raise NonFiniteError("sequence inputs contain NaN or infinity")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "targets", y)

    @property
    def size(self) -> int:
        return self.inputs.shape[0]

    @property
    def steps(self) -> int:
        return self.inputs.shape[1]

    @property
    def features(self) -> int:
        return self.inputs.shape[2]

    def __len__(self) -> int:
        return self.size

    def take(self, idx) -> "SequenceBatch":
        idx = np.asarray(idx)
        return SequenceBatch(self.inputs[idx], self.targets[idx], self.task)

    def window(self, start: int, stop: int) -> "SequenceBatch":
        return SequenceBatch(self.inputs[:, start:stop], self.targets, self.task)

    def with_inputs(self, inputs: np.ndarray) -> "SequenceBatch":
        return SequenceBatch(inputs, self.targets, self.task)
