"""Parameter containers and initialisation.

Canonical flat ordering
-----------------------
Parameters are flattened in insertion order, each array raveled row-major:

* vanilla RNN: ``W`` (hidden x input), ``U`` (hidden x hidden), ``b`` (hidden),
  ``V`` (output x hidden), ``c`` (output)
* IndRNN with L layers: ``W0, u0, b0, W1, u1, b1, ..., V, c`` where ``Wl`` is
  (hidden x in_l) and ``ul``, ``bl`` are per-neuron vectors.

``W``, ``U``/``u`` and ``b`` are the transition parameters; ``V`` and ``c`` the
readout parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Tuple

import numpy as np

from ..numerics import Rng, ShapeError, as_vector

CELL_TYPES = ("rnn", "indrnn")
READOUT = ("V", "c")


@dataclass(frozen=True)
class ModelSpec:
    cell: str = "rnn"
    input_dim: int = 1
    hidden_dim: int = 128
    output_dim: int = 1
    n_layers: int = 1

    def __post_init__(self):
        if self.cell not in CELL_TYPES:
            raise ValueError(f"unknown cell type {self.cell!r}; expected one of {CELL_TYPES}")
        if self.cell == "rnn" and self.n_layers != 1:
            raise ValueError("the vanilla RNN cell is single-layer")
        for name in ("input_dim", "hidden_dim", "output_dim", "n_layers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def shapes(self) -> List[Tuple[str, Tuple[int, ...]]]:
        d, h, o = self.input_dim, self.hidden_dim, self.output_dim
        if self.cell == "rnn":
            out = [("W", (h, d)), ("U", (h, h)), ("b", (h,))]
        else:
            out = []
            for layer in range(self.n_layers):
                fan_in = d if layer == 0 else h
                out += [(f"W{layer}", (h, fan_in)), (f"u{layer}", (h,)), (f"b{layer}", (h,))]
        return out + [("V", (o, h)), ("c", (o,))]


@dataclass
class ParamSet:
    """Ordered name -> array map with a flat-vector view."""

    spec: ModelSpec
    arrays: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        expected = self.spec.shapes()
        if list(self.arrays) != [n for n, _ in expected]:
            raise ShapeError(f"parameter names {list(self.arrays)} do not match {[n for n, _ in expected]}")
        for name, shape in expected:
            arr = np.ascontiguousarray(self.arrays[name], dtype=np.float64)
            if arr.shape != shape:
                raise ShapeError(f"parameter {name} has shape {arr.shape}, expected {shape}")
            self.arrays[name] = arr

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.arrays)

    def items(self):
        return self.arrays.items()

    @property
    def size(self) -> int:
        return sum(a.size for a in self.arrays.values())

    def transition_names(self) -> List[str]:
        return [n for n in self.arrays if n not in READOUT]

    def flatten(self) -> np.ndarray:
        if not self.arrays:
            return np.zeros(0)
        return np.concatenate([a.ravel() for a in self.arrays.values()])

    def unflatten(self, flat) -> "ParamSet":
        """New ParamSet of the same spec holding the values of ``flat``."""
        flat = as_vector(flat)
        if flat.size != self.size:
            raise ShapeError(f"flat vector has {flat.size} entries, parameters need {self.size}")
        out, offset = {}, 0
        for name, arr in self.arrays.items():
            out[name] = flat[offset:offset + arr.size].reshape(arr.shape).copy()
            offset += arr.size
        return ParamSet(self.spec, out)

    def copy(self) -> "ParamSet":
        return ParamSet(self.spec, {n: a.copy() for n, a in self.arrays.items()})

    def zeros_like(self) -> "ParamSet":
        return ParamSet(self.spec, {n: np.zeros_like(a) for n, a in self.arrays.items()})

    def allclose(self, other: "ParamSet", **kw) -> bool:
        return self.spec == other.spec and np.allclose(self.flatten(), other.flatten(), **kw)


def zero_params(spec: ModelSpec) -> ParamSet:
    return ParamSet(spec, {n: np.zeros(s) for n, s in spec.shapes()})


def init_params(spec: ModelSpec, rng: Rng) -> ParamSet:
    """Seeded initialisation.

    Every matrix and bias is uniform(-1/sqrt(hidden), 1/sqrt(hidden)); the
    IndRNN recurrent vectors are uniform(0, 1). The vanilla recurrent matrix
    gets the same plain uniform init (no identity or orthogonal start).
    """
    bound = 1.0 / math.sqrt(spec.hidden_dim)
    arrays = {}
    for name, shape in spec.shapes():
        if name.startswith("u"):
            arrays[name] = rng.uniform(shape, 0.0, 1.0)
        else:
            arrays[name] = rng.uniform(shape, -bound, bound)
    return ParamSet(spec, arrays)
