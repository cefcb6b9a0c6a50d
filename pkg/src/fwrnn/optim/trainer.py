"""Seeded training loop shared by every optimizer.

Accounting: one outer step (one parameter update) per minibatch, or per
segment under truncated BPTT; an epoch is one shuffled pass over the training
set. Frank-Wolfe inner iterations draw extra minibatches in ``fresh`` mode but
do not advance the epoch; they show up in ``grad_evals`` and ``inner_iters``.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, fields
from typing import Callable, List, Optional, Tuple

import numpy as np

from ..data import Dataset
from ..diagnostics import angle_probe, summarize_angles
from ..models import ModelSpec, ParamSet, SequenceBatch, backward, bptt, forward, init_params, predict
from ..models.cells import batch_loss
from ..models.tbptt import tbptt_segments
from ..numerics import NonFiniteError, Rng, derive_seed
from .baselines import AdamState, clip_gradient, step_decay
from .frank_wolfe import FwConfig, fw_inner_loop, fw_outer_step

log = logging.getLogger(__name__)

OPTIMIZERS = ("sgd", "sgd-clip", "adam", "tbptt", "fw", "fw+tbptt", "nsgd")


class TrainingAborted(RuntimeError):
    def __init__(self, epoch: int, step: int, cause: str):
        super().__init__(f"training aborted at epoch {epoch}, outer step {step}: {cause}")
        self.epoch, self.step, self.cause = epoch, step, cause


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer choice and schedule.

    ``lr`` is the SGD / Adam learning rate; for Frank-Wolfe it only drives the
    radius schedule (delta_t = delta0 * lr_t / lr) and, in ``adam`` outer mode,
    Adam's step size. ``clip`` is the l2 threshold for ``sgd-clip`` (and for
    ``tbptt`` when positive). ``nsgd`` is plain normalized SGD,
    w <- w - eta * delta_t * g / ||g||_2, kept as a reference for FW with K=1.
    """

    optimizer: str = "fw"
    epochs: int = 10
    batch_size: int = 128
    lr: float = 1e-3
    lr_decay: float = 1.0
    decay_every: int = 0
    clip: float = 0.0
    segment_len: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    fw: FwConfig = field(default_factory=FwConfig)
    probe_angles: bool = True
    probe_samples: int = 2048
    angles_per_epoch: int = 1

    def validate(self) -> List[str]:
        errors = []
        if self.optimizer not in OPTIMIZERS:
            errors.append(f"train.optimizer must be one of {OPTIMIZERS} (got {self.optimizer!r})")
        if self.epochs < 0:
            errors.append("train.epochs must be >= 0")
        if self.batch_size < 1:
            errors.append("train.batch_size must be >= 1")
        if not self.lr > 0:
            errors.append("train.lr must be positive")
        if not 0 < self.lr_decay <= 1:
            errors.append("train.lr_decay must lie in (0, 1]")
        if self.decay_every < 0:
            errors.append("train.decay_every must be >= 0")
        if self.optimizer == "sgd-clip" and not self.clip > 0:
            errors.append("train.clip must be positive for sgd-clip")
        if self.optimizer in ("tbptt", "fw+tbptt") and self.segment_len < 1:
            errors.append("train.segment_len must be >= 1 for truncated BPTT")
        if self.probe_samples < 1 or self.angles_per_epoch < 0:
            errors.append("train.probe_samples must be >= 1 and train.angles_per_epoch >= 0")
        errors += [f"fw.{e}" for e in self.fw.validate()]
        return errors

    @property
    def uses_tbptt(self) -> bool:
        return self.optimizer in ("tbptt", "fw+tbptt")

    @property
    def uses_fw(self) -> bool:
        return self.optimizer in ("fw", "fw+tbptt")


@dataclass
class TrainRecord:
    epoch: int
    train_loss: float
    test_loss: float
    test_accuracy: float
    val_loss: float
    val_accuracy: float
    lr: float
    delta: float
    updates: int
    grad_evals: int
    inner_iters: int
    angle_mean: float
    angle_std: float
    angle_max: float
    angle_within45: float
    angles: str
    wall_seconds: float

    @classmethod
    def columns(cls) -> List[str]:
        return [f.name for f in fields(cls)]


TIMING_COLUMNS = ("wall_seconds",)


def evaluate(params: ParamSet, batch: Optional[SequenceBatch], chunk: int = 1024) -> Tuple[float, float]:
    """(loss, accuracy) on ``batch``; accuracy is NaN for regression."""
    if batch is None or batch.size == 0:
        return math.nan, math.nan
    out = predict(params, batch.inputs, chunk)
    loss = batch_loss(out, batch.targets, batch.task)
    if batch.task == "multiclass":
        acc = float(np.mean(np.argmax(out, axis=1) == batch.targets))
    elif batch.task == "binary":
        acc = float(np.mean((out[:, 0] > 0.5) == (batch.targets.reshape(-1) > 0.5)))
    else:
        acc = math.nan
    return loss, acc


def _loss_grad_state(params: ParamSet, batch: SequenceBatch, h0=None):
    trace = forward(params, batch, h0)
    return trace.loss, backward(params, batch, trace), trace.final_states


class _Probe:
    """Fixed training subsample used for the 'full-batch' gradient of the angle probe."""

    def __init__(self, train: SequenceBatch, size: int, rng: Rng):
        n = min(size, train.size)
        idx = np.sort(rng.permutation(train.size)[:n]) if n < train.size else np.arange(train.size)
        self.batch = train.take(idx)

    def angle(self, params: ParamSet, direction: np.ndarray) -> float:
        _, grad = bptt(params, self.batch)
        return angle_probe(grad.flatten(), direction).degrees


def train(spec: ModelSpec, dataset: Dataset, cfg: TrainConfig, seed: int,
          init: Optional[ParamSet] = None,
          on_epoch: Optional[Callable[[TrainRecord, ParamSet], None]] = None) -> Tuple[ParamSet, List[TrainRecord]]:
    """Train ``spec`` on ``dataset``; returns the final parameters and one record per epoch."""
    errors = cfg.validate()
    if errors:
        raise ValueError("; ".join(errors))
    params = init if init is not None else init_params(spec, Rng(derive_seed(seed, "init")))
    records: List[TrainRecord] = []
    if cfg.epochs == 0:
        return params, records

    train_set = dataset.train
    n = train_set.size
    shuffle_rng = Rng(derive_seed(seed, "shuffle"))
    inner_rng = Rng(derive_seed(seed, "inner"))
    probe = _Probe(train_set, cfg.probe_samples, Rng(derive_seed(seed, "probe"))) if cfg.probe_angles else None
    fw = cfg.fw
    adam = None
    if cfg.optimizer == "adam" or (cfg.uses_fw and fw.outer_mode == "adam"):
        adam = AdamState(params.size, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)

    updates = grad_evals = inner_iters = 0
    steps_per_epoch = math.ceil(n / cfg.batch_size)
    units_per_batch = len(tbptt_segments(train_set.take([0]), cfg.segment_len)) if cfg.uses_tbptt else 1
    budget = fw.T if (cfg.uses_fw and fw.T is not None) else None

    for epoch in range(1, cfg.epochs + 1):
        started = time.perf_counter()
        lr = step_decay(cfg.lr, cfg.lr_decay, cfg.decay_every, epoch)
        delta = fw.delta(lr / cfg.lr)
        if adam is not None:
            adam.lr = lr
        order = shuffle_rng.permutation(n)
        total_units = steps_per_epoch * units_per_batch
        probe_at = set()
        if probe is not None and cfg.angles_per_epoch > 0:
            probe_at = {int(round(total_units * (i + 1) / cfg.angles_per_epoch)) - 1
                        for i in range(cfg.angles_per_epoch)}
        angles: List[float] = []
        losses: List[float] = []
        unit = 0

        for b in range(steps_per_epoch):
            if budget is not None and updates >= budget:
                break
            batch = train_set.take(order[b * cfg.batch_size:(b + 1) * cfg.batch_size])
            segments = tbptt_segments(batch, cfg.segment_len) if cfg.uses_tbptt else None
            pieces = [s.batch for s in segments] if segments else [batch]
            h0 = None
            batch_loss_value = math.nan
            for piece in pieces:
                delta = fw.delta(lr / cfg.lr, updates + 1)
                try:
                    if cfg.uses_fw:
                        holder = {}

                        def grad_fn(p, bt, _h0=h0, _holder=holder):
                            loss, grad, final = _loss_grad_state(p, bt, _h0)
                            _holder.setdefault("final", final)
                            return loss, grad

                        if cfg.uses_tbptt or fw.batch_mode == "fixed":
                            source = piece
                        else:
                            def source(k, _first=piece):
                                if k == 1:
                                    return _first
                                return train_set.take(inner_rng.integers(0, n, _first.size))
                        d, report = fw_inner_loop(params, source, fw, updates + 1, delta, grad_fn)
                        new_params = fw_outer_step(params, d, fw, adam)
                        loss = report.loss_before
                        direction = d
                        h0 = holder["final"]
                        grad_evals += report.grad_evals
                        inner_iters += fw.K
                    else:
                        loss, grad, h0 = _loss_grad_state(params, piece, h0)
                        g = grad.flatten()
                        if not np.all(np.isfinite(g)):
                            raise NonFiniteError("non-finite gradient")
                        w = params.flatten()
                        # Overflow in the step surfaces as a non-finite forward pass on the next update.
                        stack = np.errstate(over="ignore", invalid="ignore")
                        stack.__enter__()
                        if cfg.optimizer == "adam":
                            step = adam.update(g)
                            direction = step
                        elif cfg.optimizer == "nsgd":
                            norm = float(np.sqrt(np.dot(g, g)))
                            direction = -(delta * g / norm) if norm > 0 else np.zeros_like(g)
                            step = fw.eta * direction
                        else:
                            if cfg.optimizer == "sgd-clip" or (cfg.optimizer == "tbptt" and cfg.clip > 0):
                                g = clip_gradient(g, cfg.clip)
                            direction = -g
                            step = -lr * g
                        new_params = params.unflatten(w + step)
                        stack.__exit__(None, None, None)
                        grad_evals += 1
                        inner_iters += 1
                except NonFiniteError as exc:
                    raise TrainingAborted(epoch, updates + 1, str(exc)) from exc
                if unit in probe_at:
                    angles.append(probe.angle(params, direction))
                params = new_params
                updates += 1
                unit += 1
                batch_loss_value = loss
            losses.append(batch_loss_value)

        test_loss, test_acc = evaluate(params, dataset.test)
        val_loss, val_acc = evaluate(params, dataset.val)
        summary = summarize_angles(angles)
        record = TrainRecord(
            epoch=epoch,
            train_loss=float(np.mean(losses)) if losses else math.nan,
            test_loss=test_loss,
            test_accuracy=test_acc,
            val_loss=val_loss,
            val_accuracy=val_acc,
            lr=lr,
            delta=delta if (cfg.uses_fw or cfg.optimizer == "nsgd") else math.nan,
            updates=updates,
            grad_evals=grad_evals,
            inner_iters=inner_iters,
            angle_mean=summary["mean"],
            angle_std=summary["std"],
            angle_max=summary["max"],
            angle_within45=summary["within45"],
            angles=" ".join(repr(a) for a in angles),
            wall_seconds=time.perf_counter() - started,
        )
        records.append(record)
        log.info("epoch %d train_loss %.5g test_loss %.5g test_acc %.4f", epoch, record.train_loss,
                 test_loss, test_acc)
        if on_epoch is not None:
            on_epoch(record, params)
        if budget is not None and updates >= budget:
            break
    return params, records
