"""Dense array helpers, lp norms and a portable seeded generator.

Arrays are plain ``numpy.ndarray`` objects of dtype float64 in C (row-major)
order. Everything that needs randomness takes an :class:`Rng`, never numpy's
global state, so that a run is reproducible across machines.
"""

from __future__ import annotations

import math
import zlib
from typing import Union

import numpy as np

__all__ = [
    "ShapeError",
    "NonFiniteError",
    "matmul",
    "lp_norm",
    "dual_exponent",
    "as_vector",
    "Rng",
    "mix64",
    "derive_seed",
]

Exponent = Union[int, float]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB


class ShapeError(ValueError):
    """Raised when array shapes do not line up."""


class NonFiniteError(ArithmeticError):
    """Raised when a NaN or infinity shows up where finite values are required."""


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-d operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")
    with np.errstate(over="ignore", invalid="ignore"):
        out = a @ b
    if not np.all(np.isfinite(out)):
        raise NonFiniteError(f"matmul of {a.shape} by {b.shape} produced non-finite entries")
    return out


def as_vector(v) -> np.ndarray:
    return np.ascontiguousarray(v, dtype=np.float64).reshape(-1)


def dual_exponent(p: Exponent) -> float:
    """Return q with 1/p + 1/q = 1 (q = inf for p = 1, q = 1 for p = inf)."""
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    if p == 1.0:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def lp_norm(v, p: Exponent) -> float:
    """(sum |v_i|^p)^(1/p), the max magnitude for p = inf, 0 for an empty vector."""
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"lp_norm needs p >= 1, got {p}")
    a = np.abs(as_vector(v))
    if a.size == 0:
        return 0.0
    if math.isinf(p):
        return float(a.max())
    if p == 1.0:
        return float(a.sum())
    if p == 2.0:
        return float(np.sqrt(np.dot(a, a)))
    # Rescale by the largest entry so that |v_i|^p neither overflows nor underflows.
    m = a.max()
    if m == 0.0:
        return 0.0
    return float(m * np.sum((a / m) ** p) ** (1.0 / p))


# ---------------------------------------------------------------------------
# Random numbers
# ---------------------------------------------------------------------------


def mix64(x: int) -> int:
    """SplitMix64 finalizer on a Python int (taken modulo 2**64)."""
    z = x & _MASK64
    z = ((z ^ (z >> 30)) * _MUL1) & _MASK64
    z = ((z ^ (z >> 27)) * _MUL2) & _MASK64
    return z ^ (z >> 31)


def _key_to_int(key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    return int(key) & _MASK64


def derive_seed(seed: int, *keys) -> int:
    """Derive an independent 64-bit seed from ``seed`` and a path of keys.

    Each key (an int, or a str hashed with CRC-32) is folded in as
    ``h = mix64(h ^ mix64(key + GOLDEN))``. This is the documented way of
    giving every worker, grid cell or purpose its own stream.
    """
    h = int(seed) & _MASK64
    for key in keys:
        h = mix64(h ^ mix64(_key_to_int(key) + _GOLDEN))
    return h


class Rng:
    """SplitMix64 stream generator.

    Output i (counting from 1) is ``mix64(seed + i * 0x9E3779B97F4A7C15)``, so
    draws are a pure function of (seed, position) and can be produced in
    vectorised blocks with wrapping uint64 arithmetic. Floats use the top 53
    bits; normals use the cosine branch of Box-Muller (two uniforms each).
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._counter = 0

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, position={self._counter})"

    @property
    def position(self) -> int:
        return self._counter

    def split(self, index) -> "Rng":
        return Rng(derive_seed(self.seed, index))

    def next_u64(self, n: int) -> np.ndarray:
        n = int(n)
        if n < 0:
            raise ValueError("draw count must be non-negative")
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        with np.errstate(over="ignore"):
            z = np.uint64(self.seed) + idx * np.uint64(_GOLDEN)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
        return z ^ (z >> np.uint64(31))

    def uniform(self, size=None, low: float = 0.0, high: float = 1.0):
        """Uniform draws on [low, high)."""
        shape = () if size is None else size
        n = int(np.prod(shape))
        u = (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
        u = low + (high - low) * u
        if size is None:
            return float(u[0])
        return u.reshape(shape)

    def normal(self, size=None, mean: float = 0.0, std: float = 1.0):
        shape = () if size is None else size
        n = int(np.prod(shape))
        u = self.uniform(2 * n).reshape(2, n) if n else np.zeros((2, 0))
        r = np.sqrt(-2.0 * np.log1p(-u[0]))
        z = mean + std * r * np.cos(2.0 * np.pi * u[1])
        if size is None:
            return float(z[0])
        return z.reshape(shape)

    def integers(self, low: int, high: int, size=None):
        """Integers in [low, high) as floor(u * (high - low)) + low."""
        if high <= low:
            raise ValueError(f"empty integer range [{low}, {high})")
        u = self.uniform(size)
        out = np.floor(np.asarray(u) * (high - low)).astype(np.int64) + low
        if size is None:
            return int(out)
        return out

    def permutation(self, n: int) -> np.ndarray:
        """Random permutation of range(n): stable argsort of n fresh 64-bit keys."""
        keys = self.next_u64(n)
        return np.argsort(keys, kind="stable").astype(np.int64)
