"""Gradient baselines: plain SGD, norm clipping and Adam.

All steps work on flat float64 vectors or ParamSets and return new objects;
the only mutable piece is :class:`AdamState`, owned by a single trainer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..models import ParamSet
from ..numerics import NonFiniteError, ShapeError, as_vector


def _finite(*arrays) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFiniteError("optimizer step received non-finite values")


def _flat(x) -> np.ndarray:
    return x.flatten() if isinstance(x, ParamSet) else as_vector(x)


def _wrap(template, flat: np.ndarray):
    return template.unflatten(flat) if isinstance(template, ParamSet) else flat


def clip_gradient(grad: np.ndarray, threshold: float) -> np.ndarray:
    """Rescale ``grad`` to l2 norm ``threshold`` when it is longer than that."""
    if not threshold > 0:
        raise ValueError(f"clipping threshold must be positive, got {threshold}")
    norm = float(np.sqrt(np.dot(grad, grad)))
    if norm > threshold:
        return grad * (threshold / norm)
    return grad


def sgd_step(params, grad, lr: float):
    w, g = _flat(params), _flat(grad)
    if w.shape != g.shape:
        raise ShapeError(f"gradient of size {g.size} for {w.size} parameters")
    _finite(w, g)
    return _wrap(params, w - lr * g)


def clip_step(params, grad, lr: float, threshold: float):
    g = clip_gradient(_flat(grad), threshold)
    return sgd_step(params, g, lr)


@dataclass
class AdamState:
    """Moment estimates for Adam (Kingma and Ba) with bias correction."""

    size: int
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.m is None:
            self.m = np.zeros(self.size)
        if self.v is None:
            self.v = np.zeros(self.size)
        if self.m.shape != (self.size,) or self.v.shape != (self.size,):
            raise ShapeError("Adam moments do not match the parameter count")

    def update(self, grad: np.ndarray) -> np.ndarray:
        """Advance the moments with ``grad`` and return the additive parameter change."""
        if grad.shape != (self.size,):
            raise ShapeError(f"gradient of size {grad.size} for Adam state of size {self.size}")
        self.step += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1 ** self.step)
        v_hat = self.v / (1.0 - self.beta2 ** self.step)
        return -self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def adam_step(params, grad, state: AdamState):
    w, g = _flat(params), _flat(grad)
    _finite(w, g)
    return _wrap(params, w + state.update(g))


def step_decay(lr0: float, factor: float, every: int, epoch: int) -> float:
    """Learning rate for 1-based ``epoch``: lr0 * factor ** floor((epoch - 1) / every)."""
    if every <= 0 or factor == 1.0:
        return lr0
    return lr0 * factor ** math.floor((epoch - 1) / every)
