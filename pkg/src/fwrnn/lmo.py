"""Closed-form linear minimization oracles over lp balls.

For the ball ``{s : ||s||_p <= delta}`` the minimizer of ``<s, g>`` has
``|s_i|`` proportional to ``|g_i|**(q/p)`` with ``1/p + 1/q = 1``, signs
opposite to ``g`` and ``||s||_p = delta``. The attained value is then
``-delta * ||g||_q``. p = 2 gives the delta-scaled normalized gradient and
p = inf the delta-scaled sign vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import NonFiniteError, as_vector, dual_exponent

__all__ = ["LmoResult", "lmo_lp_ball", "lmo_l1_ball"]


@dataclass(frozen=True)
class LmoResult:
    direction: np.ndarray
    attained_value: float


def _check(g: np.ndarray, delta: float) -> None:
    if not delta > 0 or not math.isfinite(delta):
        raise ValueError(f"radius must be positive and finite, got {delta}")
    if not np.all(np.isfinite(g)):
        raise NonFiniteError("LMO called with a non-finite gradient")


def lmo_l1_ball(g, delta: float) -> LmoResult:
    """Signed vertex of the cross-polytope at the largest |g_i| (lowest index on ties)."""
    g = as_vector(g)
    _check(g, delta)
    s = np.zeros_like(g)
    if g.size == 0 or not np.any(g):
        return LmoResult(s, 0.0)
    i = int(np.argmax(np.abs(g)))
    s[i] = -delta * np.sign(g[i])
    return LmoResult(s, float(np.dot(s, g)))


def lmo_lp_ball(g, p: float, delta: float) -> LmoResult:
    """argmin over ``||s||_p <= delta`` of ``<s, g>``.

    ``p = 1`` is forwarded to :func:`lmo_l1_ball`. A zero gradient returns the
    zero vector so that a Frank-Wolfe step at a stationary point is a no-op.
    """
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    if p == 1.0:
        return lmo_l1_ball(g, delta)
    g = as_vector(g)
    _check(g, delta)
    if g.size == 0 or not np.any(g):
        return LmoResult(np.zeros_like(g), 0.0)

    sign = np.sign(g)
    if math.isinf(p):
        s = -delta * sign
    elif p == 2.0:
        s = -delta * g / np.sqrt(np.dot(g, g))
    else:
        q = dual_exponent(p)
        a = np.abs(g)
        # Normalise by max|g| first; the exponent q/p can be large for p near 1.
        w = (a / a.max()) ** (q / p)
        wmax = w.max()
        norm_w = wmax * np.sum((w / wmax) ** p) ** (1.0 / p)
        s = -delta * sign * (w / norm_w)
    return LmoResult(s, float(np.dot(s, g)))
