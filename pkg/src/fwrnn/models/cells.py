"""Forward evaluation and exact backpropagation through time.

Vanilla cell::

    z_m = tanh(W x_m + U z_{m-1} + b),   output = V z_M + c

IndRNN layer l (layer -1 is the input sequence)::

    z_m^l = relu(W_l z_m^{l-1} + u_l * z_{m-1}^l + b_l)

The readout sees only the last layer's final state. The initial state is zero
unless an explicit one is passed (truncated BPTT carries it across segments).
Losses are averaged over the batch: squared error for ``regression`` and
``binary`` tasks, softmax cross-entropy for ``multiclass``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..numerics import NonFiniteError, ShapeError
from .batch import SequenceBatch
from .params import ParamSet

__all__ = [
    "ForwardTrace",
    "forward",
    "bptt",
    "backward",
    "rnn_forward",
    "rnn_bptt",
    "indrnn_forward",
    "indrnn_bptt",
    "predict",
    "batch_loss",
    "loss_and_output_grad",
]


@dataclass
class ForwardTrace:
    """Everything the backward pass needs.

    ``states[l]`` is (M+1, batch, hidden) with ``states[l][0]`` the initial
    state; ``preacts[l]`` is (M, batch, hidden).
    """

    states: List[np.ndarray]
    preacts: List[np.ndarray]
    outputs: np.ndarray
    loss: float

    @property
    def final_states(self) -> List[np.ndarray]:
        return [z[-1] for z in self.states]


def loss_and_output_grad(outputs: np.ndarray, targets: np.ndarray, task: str) -> Tuple[float, np.ndarray]:
    n = outputs.shape[0]
    if task == "multiclass":
        shifted = outputs - outputs.max(axis=1, keepdims=True)
        logz = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        logp = shifted - logz
        rows = np.arange(n)
        loss = -logp[rows, targets].mean()
        dout = np.exp(logp)
        dout[rows, targets] -= 1.0
        return float(loss), dout / n
    y = targets.reshape(n, -1)
    if y.shape[1] != outputs.shape[1]:
        raise ShapeError(f"targets of width {y.shape[1]} for outputs of width {outputs.shape[1]}")
    with np.errstate(over="ignore", invalid="ignore"):
        diff = outputs - y
        return float(np.sum(diff * diff) / n), 2.0 * diff / n


def batch_loss(outputs: np.ndarray, targets: np.ndarray, task: str) -> float:
    return loss_and_output_grad(outputs, targets, task)[0]


def _check_inputs(params: ParamSet, batch: SequenceBatch) -> None:
    if batch.features != params.spec.input_dim:
        raise ShapeError(f"batch has {batch.features} features, model expects {params.spec.input_dim}")
    if batch.steps < 1:
        raise ShapeError("sequences must have at least one time step")


def _initial_states(params: ParamSet, n: int, h0) -> List[np.ndarray]:
    spec = params.spec
    if h0 is None:
        return [np.zeros((n, spec.hidden_dim)) for _ in range(spec.n_layers)]
    if isinstance(h0, np.ndarray):
        h0 = [h0]
    h0 = [np.asarray(h, dtype=np.float64) for h in h0]
    if len(h0) != spec.n_layers or any(h.shape != (n, spec.hidden_dim) for h in h0):
        raise ShapeError("initial state does not match (layers, batch, hidden)")
    return h0


def _raise_non_finite(preacts: np.ndarray, layer: int) -> None:
    bad = ~np.all(np.isfinite(preacts.reshape(preacts.shape[0], -1)), axis=1)
    if np.any(bad):
        step = int(np.argmax(bad)) + 1
        err = NonFiniteError(f"non-finite activation in layer {layer} at time step {step}")
        err.step = step
        raise err


def _readout(params: ParamSet, z_last: np.ndarray) -> np.ndarray:
    out = z_last @ params["V"].T + params["c"]
    if not np.all(np.isfinite(out)):
        raise NonFiniteError("non-finite network output")
    return out


# ---------------------------------------------------------------------------
# vanilla tanh RNN
# ---------------------------------------------------------------------------


def _rnn_states(params: ParamSet, x: np.ndarray, h0: np.ndarray):
    W, U, b = params["W"], params["U"], params["b"]
    steps = x.shape[0]
    pre = x @ W.T + b
    states = np.empty((steps + 1,) + h0.shape)
    states[0] = h0
    z = h0
    UT = U.T
    for m in range(steps):
        a = pre[m] + z @ UT
        pre[m] = a
        z = np.tanh(a)
        states[m + 1] = z
    _raise_non_finite(pre, 0)
    return states, pre


def rnn_forward(params: ParamSet, batch: SequenceBatch, h0=None) -> ForwardTrace:
    _check_inputs(params, batch)
    (z0,) = _initial_states(params, batch.size, h0)
    x = batch.inputs.transpose(1, 0, 2)
    with np.errstate(over="ignore", invalid="ignore"):
        states, pre = _rnn_states(params, x, z0)
        out = _readout(params, states[-1])
    return ForwardTrace([states], [pre], out, batch_loss(out, batch.targets, batch.task))


def _rnn_backward(params: ParamSet, batch: SequenceBatch, trace: ForwardTrace) -> ParamSet:
    U, V = params["U"], params["V"]
    states = trace.states[0]
    _, dout = loss_and_output_grad(trace.outputs, batch.targets, batch.task)
    steps, n, hidden = trace.preacts[0].shape
    x = batch.inputs.transpose(1, 0, 2)

    dA = np.empty((steps, n, hidden))
    dz = dout @ V
    for m in range(steps - 1, -1, -1):
        z = states[m + 1]
        da = dz * (1.0 - z * z)
        dA[m] = da
        dz = da @ U
    flat_dA = dA.reshape(-1, hidden)
    grads = {
        "W": flat_dA.T @ x.reshape(-1, x.shape[2]),
        "U": flat_dA.T @ states[:-1].reshape(-1, hidden),
        "b": flat_dA.sum(axis=0),
        "V": dout.T @ states[-1],
        "c": dout.sum(axis=0),
    }
    return ParamSet(params.spec, grads)


def rnn_bptt(params: ParamSet, batch: SequenceBatch, h0=None) -> Tuple[float, ParamSet]:
    trace = rnn_forward(params, batch, h0)
    return trace.loss, backward(params, batch, trace)


# ---------------------------------------------------------------------------
# stacked IndRNN
# ---------------------------------------------------------------------------


def indrnn_forward(params: ParamSet, batch: SequenceBatch, h0=None) -> ForwardTrace:
    _check_inputs(params, batch)
    with np.errstate(over="ignore", invalid="ignore"):
        return _indrnn_forward(params, batch, h0)


def _indrnn_forward(params: ParamSet, batch: SequenceBatch, h0) -> ForwardTrace:
    z0s = _initial_states(params, batch.size, h0)
    inp = batch.inputs.transpose(1, 0, 2)
    all_states, all_pre = [], []
    for layer in range(params.spec.n_layers):
        W, u, b = params[f"W{layer}"], params[f"u{layer}"], params[f"b{layer}"]
        pre = inp @ W.T + b
        states = np.empty((pre.shape[0] + 1,) + z0s[layer].shape)
        states[0] = z = z0s[layer]
        for m in range(pre.shape[0]):
            a = pre[m] + u * z
            pre[m] = a
            z = np.maximum(a, 0.0)
            states[m + 1] = z
        _raise_non_finite(pre, layer)
        all_states.append(states)
        all_pre.append(pre)
        inp = states[1:]
    out = _readout(params, all_states[-1][-1])
    return ForwardTrace(all_states, all_pre, out, batch_loss(out, batch.targets, batch.task))


def _indrnn_backward(params: ParamSet, batch: SequenceBatch, trace: ForwardTrace) -> ParamSet:
    spec = params.spec
    _, dout = loss_and_output_grad(trace.outputs, batch.targets, batch.task)
    top = trace.states[-1]
    grads = {"V": dout.T @ top[-1], "c": dout.sum(axis=0)}

    steps, n, hidden = trace.preacts[-1].shape
    d_out_seq = np.zeros((steps, n, hidden))
    d_out_seq[-1] = dout @ params["V"]
    for layer in range(spec.n_layers - 1, -1, -1):
        u = params[f"u{layer}"]
        pre, states = trace.preacts[layer], trace.states[layer]
        active = pre > 0.0
        dA = np.empty_like(pre)
        carry = np.zeros((n, hidden))
        for m in range(steps - 1, -1, -1):
            da = (d_out_seq[m] + carry) * active[m]
            dA[m] = da
            carry = da * u
        inp = batch.inputs.transpose(1, 0, 2) if layer == 0 else trace.states[layer - 1][1:]
        flat_dA = dA.reshape(-1, hidden)
        grads[f"W{layer}"] = flat_dA.T @ inp.reshape(-1, inp.shape[2])
        grads[f"u{layer}"] = np.einsum("mbh,mbh->h", dA, states[:-1])
        grads[f"b{layer}"] = flat_dA.sum(axis=0)
        if layer > 0:
            d_out_seq = dA @ params[f"W{layer}"]
    ordered = {name: grads[name] for name, _ in spec.shapes()}
    return ParamSet(spec, ordered)


def indrnn_bptt(params: ParamSet, batch: SequenceBatch, h0=None) -> Tuple[float, ParamSet]:
    trace = indrnn_forward(params, batch, h0)
    return trace.loss, backward(params, batch, trace)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def forward(params: ParamSet, batch: SequenceBatch, h0=None) -> ForwardTrace:
    if params.spec.cell == "rnn":
        return rnn_forward(params, batch, h0)
    return indrnn_forward(params, batch, h0)


def bptt(params: ParamSet, batch: SequenceBatch, h0=None) -> Tuple[float, ParamSet]:
    if params.spec.cell == "rnn":
        return rnn_bptt(params, batch, h0)
    return indrnn_bptt(params, batch, h0)


def backward(params: ParamSet, batch: SequenceBatch, trace: ForwardTrace) -> ParamSet:
    """Gradient of ``trace.loss`` with respect to every parameter."""
    with np.errstate(over="ignore", invalid="ignore"):
        if params.spec.cell == "rnn":
            return _rnn_backward(params, batch, trace)
        return _indrnn_backward(params, batch, trace)


def predict(params: ParamSet, inputs: np.ndarray, chunk: int = 1024) -> np.ndarray:
    """Network outputs for a (n, steps, features) array, evaluated in chunks."""
    outs = []
    dummy_task = "regression"
    for start in range(0, inputs.shape[0], chunk):
        x = inputs[start:start + chunk]
        fake = SequenceBatch(x, np.zeros((x.shape[0], params.spec.output_dim)), dummy_task)
        outs.append(forward(params, fake).outputs)
    if not outs:
        return np.zeros((0, params.spec.output_dim))
    return np.concatenate(outs, axis=0)
