"""Two-loop Frank-Wolfe optimizer for recurrent networks.

Each outer step t looks for a good update inside the ball
``{d : ||d||_p <= delta_t}`` around the current weights by running K
stochastic Frank-Wolfe iterations on ``d -> F(w + d)`` starting from d = 0::

    s_k = argmin_{||s||_p <= delta_t} <s, grad F(w + d_{k-1})>
    d_k = (1 - gamma_k) d_{k-1} + gamma_k s_k          gamma_k = 1/k

and then moves the weights along the result, either directly
(``w <- w + eta * d_K``) or by handing ``-d_K`` to Adam as a pseudo-gradient.
With gamma_k = 1/k, d_K is the running average of the K oracle answers, so
it never leaves the ball.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from ..lmo import lmo_lp_ball
from ..models import ParamSet, SequenceBatch, bptt
from ..numerics import NonFiniteError, ShapeError, as_vector, lp_norm
from .baselines import AdamState

OUTER_MODES = ("plain", "adam")
BATCH_MODES = ("fresh", "fixed")
STEP_RULES = ("harmonic", "classic")
RADIUS_SCHEDULES = ("lr", "inverse-t")

GradFn = Callable[[ParamSet, SequenceBatch], Tuple[float, ParamSet]]


@dataclass(frozen=True)
class FwConfig:
    """Frank-Wolfe hyperparameters.

    ``delta0`` is the initial radius. With ``radius_schedule = "lr"`` the
    radius at any time is ``delta0 * lr_t / lr0``, so it shrinks together with
    the learning rate; ``"inverse-t"`` further divides by the outer step t,
    which keeps the sum of squared radii finite.
    ``batch_mode`` selects a fresh minibatch per inner iteration or one batch
    reused for all K. ``step_rule`` picks gamma_k = 1/k (``harmonic``) or the
    textbook 2/(k+1) (``classic``).
    """

    p: float = 2.0
    delta0: float = 1.0
    K: int = 1
    T: Optional[int] = None
    eta: float = 1e-3
    outer_mode: str = "plain"
    batch_mode: str = "fresh"
    step_rule: str = "harmonic"
    radius_schedule: str = "lr"

    def __post_init__(self):
        errors = self.validate()
        if errors:
            raise ValueError("; ".join(errors))

    def validate(self) -> List[str]:
        errors = []
        if not (self.p >= 1.0):
            errors.append(f"p must be >= 1 (got {self.p})")
        if not (self.delta0 > 0 and math.isfinite(self.delta0)):
            errors.append(f"delta0 must be positive (got {self.delta0})")
        if self.K < 1:
            errors.append(f"K must be >= 1 (got {self.K})")
        if self.T is not None and self.T < 1:
            errors.append(f"T must be >= 1 (got {self.T})")
        if not self.eta > 0:
            errors.append(f"eta must be positive (got {self.eta})")
        if self.outer_mode not in OUTER_MODES:
            errors.append(f"outer_mode must be one of {OUTER_MODES} (got {self.outer_mode!r})")
        if self.batch_mode not in BATCH_MODES:
            errors.append(f"batch_mode must be one of {BATCH_MODES} (got {self.batch_mode!r})")
        if self.step_rule not in STEP_RULES:
            errors.append(f"step_rule must be one of {STEP_RULES} (got {self.step_rule!r})")
        if self.radius_schedule not in RADIUS_SCHEDULES:
            errors.append(f"radius_schedule must be one of {RADIUS_SCHEDULES} (got {self.radius_schedule!r})")
        return errors

    def delta(self, lr_ratio: float = 1.0, t: int = 1) -> float:
        """Radius at outer step ``t`` when the learning rate is ``lr_ratio`` times its initial value."""
        if self.radius_schedule == "inverse-t":
            return self.delta0 * lr_ratio / t
        return self.delta0 * lr_ratio

    def gamma(self, k: int) -> float:
        return 1.0 / k if self.step_rule == "harmonic" else 2.0 / (k + 1)


@dataclass
class StepReport:
    t: int
    delta: float
    norms: List[float] = field(default_factory=list)
    grad_norms: List[float] = field(default_factory=list)
    losses: List[float] = field(default_factory=list)
    directions: Optional[List[np.ndarray]] = None
    loss_after: Optional[float] = None
    wall_time: float = 0.0

    @property
    def loss_before(self) -> float:
        return self.losses[0] if self.losses else math.nan

    @property
    def grad_evals(self) -> int:
        return len(self.losses)


def _batch_getter(batches):
    if callable(batches):
        return batches
    if batches is None or isinstance(batches, SequenceBatch):
        return lambda k: batches
    it = iter(batches)
    return lambda k: next(it)


def fw_inner_loop(params: ParamSet, batches, cfg: FwConfig, t: int = 1, delta: Optional[float] = None,
                  grad_fn: GradFn = bptt, keep_directions: bool = False) -> Tuple[np.ndarray, StepReport]:
    """Run the K inner iterations from ``params`` and return ``(d_K, report)``.

    ``batches`` is a SequenceBatch (reused for every k), a callable ``k -> batch``
    or an iterable consumed one batch per iteration; None suits a ``grad_fn``
    that needs no data. ``grad_fn`` maps
    ``(params, batch)`` to ``(loss, gradient ParamSet)``.
    """
    start = time.perf_counter()
    delta = cfg.delta0 if delta is None else delta
    if not delta > 0:
        raise ValueError(f"radius must be positive, got {delta}")
    next_batch = _batch_getter(batches)
    w = params.flatten()
    d = np.zeros_like(w)
    report = StepReport(t=t, delta=delta, directions=[] if keep_directions else None)
    for k in range(1, cfg.K + 1):
        probe = params if k == 1 else params.unflatten(w + d)
        loss, grad = grad_fn(probe, next_batch(k))
        g = grad.flatten()
        if not (np.all(np.isfinite(g)) and math.isfinite(loss)):
            raise NonFiniteError(f"non-finite gradient at outer step {t}, inner iteration {k}")
        s = lmo_lp_ball(g, cfg.p, delta).direction
        gamma = cfg.gamma(k)
        d = (1.0 - gamma) * d + gamma * s
        report.losses.append(loss)
        report.grad_norms.append(float(np.sqrt(np.dot(g, g))))
        report.norms.append(lp_norm(d, cfg.p))
        if keep_directions:
            report.directions.append(s)
    report.wall_time = time.perf_counter() - start
    return d, report


def fw_outer_step(params, delta_omega, cfg: FwConfig, adam: Optional[AdamState] = None):
    """Apply the inner-loop result.

    ``plain``: w + eta * d. ``adam``: Adam fed with -d as its gradient, so its
    descent step moves along +d. Accepts a ParamSet or a flat vector.
    """
    w = params.flatten() if isinstance(params, ParamSet) else as_vector(params)
    d = as_vector(delta_omega)
    if d.shape != w.shape:
        raise ShapeError(f"update of size {d.size} for {w.size} parameters")
    if cfg.outer_mode == "plain":
        new = w + cfg.eta * d
    else:
        if adam is None:
            raise ValueError("adam outer mode needs an AdamState")
        new = w + adam.update(-d)
    return params.unflatten(new) if isinstance(params, ParamSet) else new


def fw_step(params: ParamSet, batches, cfg: FwConfig, t: int = 1, delta: Optional[float] = None,
            adam: Optional[AdamState] = None, grad_fn: GradFn = bptt) -> Tuple[ParamSet, np.ndarray, StepReport]:
    """One full outer iteration: inner loop followed by the outer update."""
    d, report = fw_inner_loop(params, batches, cfg, t, delta, grad_fn)
    return fw_outer_step(params, d, cfg, adam), d, report
