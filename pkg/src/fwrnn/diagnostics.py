"""Empirical probes of the optimizer's theory.

* :func:`angle_probe` - angle between the descent direction -grad F and the
  applied update direction. Both point downhill, so 0 degrees means perfect
  agreement and the +-45 degree condition reads ``angle <= 45``.
* :func:`estimate_curvature` - Monte-Carlo lower bound on the curvature
  constant ``max 2/gamma^2 (g(y) - g(x) - <grad g(x), y - x>)`` over
  ``x, s`` in an lp ball and ``y = (1 - gamma) x + gamma s``.
* :func:`lambda_bound` - the accuracy parameter
  ``max_k 2 delta (k + 1) / M_F * ||grad F_k||_2`` over recorded inner steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .numerics import Rng, as_vector, lp_norm


@dataclass(frozen=True)
class AngleRecord:
    t: int
    degrees: float

    @property
    def defined(self) -> bool:
        return not math.isnan(self.degrees)


def angle_probe(gradient, direction, t: int = 0) -> AngleRecord:
    """Angle in degrees between ``-gradient`` and ``direction``; NaN if either is zero."""
    g = -as_vector(gradient)
    d = as_vector(direction)
    ng, nd = math.sqrt(float(np.dot(g, g))), math.sqrt(float(np.dot(d, d)))
    if ng == 0.0 or nd == 0.0 or not (math.isfinite(ng) and math.isfinite(nd)):
        return AngleRecord(t, math.nan)
    # 2 atan2(|a - b|, |a + b|) on unit vectors stays accurate near 0 and 180 degrees,
    # where acos of the cosine loses half the digits.
    a, b = g / ng, d / nd
    diff, total = a - b, a + b
    angle = 2.0 * math.atan2(math.sqrt(float(np.dot(diff, diff))), math.sqrt(float(np.dot(total, total))))
    return AngleRecord(t, math.degrees(angle))


def summarize_angles(angles: Sequence[float]) -> Dict[str, float]:
    vals = np.array([a for a in angles if not math.isnan(a)], dtype=np.float64)
    if vals.size == 0:
        return {"mean": math.nan, "std": math.nan, "max": math.nan, "within45": math.nan, "count": 0}
    return {
        "mean": float(vals.mean()),
        "std": float(vals.std()),
        "max": float(vals.max()),
        "within45": float(np.mean(vals <= 45.0)),
        "count": int(vals.size),
    }


@dataclass(frozen=True)
class CurvatureEstimate:
    value: float
    samples: int
    skipped: int
    center: Tuple[float, ...]
    radius: float
    p: float


def _ball_point(rng: Rng, center: np.ndarray, radius: float, p: float) -> np.ndarray:
    """A point of the lp ball: random direction scaled to a uniform fraction of the radius.

    Not the uniform distribution on the ball; a quarter of the draws sit on the
    boundary so that the extreme pairs which attain the maximum are reachable.
    """
    dim = center.size
    u = rng.normal(dim)
    norm = lp_norm(u, p)
    if norm == 0.0:
        return center.copy()
    r = 1.0 if rng.uniform() < 0.25 else rng.uniform()
    return center + radius * r * u / norm


def estimate_curvature(f: Callable[[np.ndarray], Tuple[float, np.ndarray]], center, radius: float,
                       p: float, samples: int, rng: Rng, history: Optional[list] = None) -> CurvatureEstimate:
    """Running maximum of the scaled Bregman divergence over random (x, s, gamma).

    ``f`` returns ``(value, gradient)`` at a flat point. Non-finite evaluations
    are skipped and counted. If ``history`` is a list, the running maximum
    after each sample is appended to it.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    if not radius > 0:
        raise ValueError("radius must be positive")
    center = as_vector(center)
    best, skipped = 0.0, 0
    for _ in range(samples):
        x = _ball_point(rng, center, radius, p)
        s = _ball_point(rng, center, radius, p)
        gamma = rng.uniform(None, 1e-3, 1.0)
        step = s - x
        y = x + gamma * step
        fx, gx = f(x)
        fy, _ = f(y)
        q = 2.0 / gamma ** 2 * (fy - fx - gamma * float(np.dot(as_vector(gx), step)))
        if not math.isfinite(q):
            skipped += 1
        elif q > best:
            best = q
        if history is not None:
            history.append(best)
    return CurvatureEstimate(best, samples, skipped, tuple(center.tolist()), radius, p)


def lambda_bound(delta_t: float, curvature: float, grad_norms: Sequence[float]) -> float:
    """max over k = 1..K of 2 * delta_t * (k + 1) / M_F * ||grad at inner step k||_2."""
    if not curvature > 0:
        raise ValueError("curvature constant must be positive")
    if len(grad_norms) == 0:
        raise ValueError("no inner-iteration gradient norms recorded")
    return max(2.0 * delta_t * (k + 1) / curvature * g for k, g in enumerate(grad_norms, start=1))
