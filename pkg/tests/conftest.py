import sys

import numpy as np
import pytest

from fwrnn.models import ModelSpec, SequenceBatch, forward, init_params
from fwrnn.numerics import Rng


def finite_difference(params, batch, step=1e-5):
    """Central differences of the batch loss with respect to every flat coordinate."""
    flat = params.flatten()
    out = np.empty_like(flat)
    for i in range(flat.size):
        up, down = flat.copy(), flat.copy()
        up[i] += step
        down[i] -= step
        out[i] = (forward(params.unflatten(up), batch).loss - forward(params.unflatten(down), batch).loss) / (2 * step)
    return out


def relative_error(a, b, floor=1e-4):
    """Per-coordinate |a - b| / max(|a|, |b|, floor)."""
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def random_instance(seed, cell=None, task=None):
    """Small random model/batch pair: M <= 20, hidden <= 8."""
    rng = Rng(seed)
    cell = cell or ("rnn", "indrnn")[rng.integers(0, 2)]
    task = task or ("regression", "binary", "multiclass")[rng.integers(0, 3)]
    layers = 1 if cell == "rnn" else int(rng.integers(1, 4))
    out_dim = int(rng.integers(2, 5)) if task == "multiclass" else 1
    spec = ModelSpec(cell, int(rng.integers(1, 4)), int(rng.integers(1, 9)), out_dim, layers)
    params = init_params(spec, rng)
    n, steps = int(rng.integers(1, 5)), int(rng.integers(1, 21))
    x = rng.normal((n, steps, spec.input_dim))
    if task == "multiclass":
        y = rng.integers(0, out_dim, n)
    elif task == "binary":
        y = rng.integers(0, 2, n)
    else:
        y = rng.normal(n)
    return params, SequenceBatch(x, y, task)


@pytest.fixture
def rng():
    return Rng(1234)


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance verdicts after the run so they survive output capture."""
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
