import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fwrnn.diagnostics import angle_probe, estimate_curvature, lambda_bound, summarize_angles
from fwrnn.numerics import Rng


def half_square(scale=1.0):
    def f(x):
        return 0.5 * scale * float(x @ x), scale * x
    return f


def test_angle_examples():
    g = np.array([1.0, -2.0, 0.5])
    assert angle_probe(g, -3 * g).degrees == pytest.approx(0.0, abs=1e-6)
    assert angle_probe(g, 3 * g).degrees == pytest.approx(180.0, abs=1e-6)
    assert angle_probe([1.0, 0.0], [0.0, 5.0]).degrees == pytest.approx(90.0, abs=1e-12)


def test_zero_vectors_are_undefined_and_dropped():
    rec = angle_probe(np.zeros(3), [1.0, 2.0, 3.0], t=4)
    assert rec.t == 4 and not rec.defined
    assert not angle_probe([1.0], [0.0]).defined
    summary = summarize_angles([10.0, math.nan, 50.0])
    assert summary["count"] == 2 and summary["mean"] == 30.0 and summary["within45"] == 0.5
    assert summarize_angles([])["count"] == 0


def test_angle_against_high_precision_arccos():
    mpmath.mp.dps = 40
    rng = Rng(31)
    for _ in range(200):
        g, d = rng.normal(3), rng.normal(3)
        mg = [-mpmath.mpf(float(v)) for v in g]
        md = [mpmath.mpf(float(v)) for v in d]
        dot = sum(a * b for a, b in zip(mg, md))
        norm = mpmath.sqrt(sum(a * a for a in mg)) * mpmath.sqrt(sum(b * b for b in md))
        exact = float(mpmath.degrees(mpmath.acos(dot / norm)))
        assert angle_probe(g, d).degrees == pytest.approx(exact, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=6), st.floats(0.01, 100))
def test_angle_range_and_scale_invariance(v, c):
    g = np.array(v)
    d = np.roll(g, 1) + 0.5
    rec = angle_probe(g, d)
    if rec.defined:
        assert 0.0 <= rec.degrees <= 180.0
        assert angle_probe(c * g, c * d).degrees == pytest.approx(rec.degrees, abs=1e-6)


def test_linear_function_has_zero_curvature():
    a = np.array([0.5, -1.0, 2.0])
    est = estimate_curvature(lambda x: (float(a @ x), a.copy()), np.zeros(3), 1.0, 2.0, 500, Rng(0))
    assert est.value == pytest.approx(0.0, abs=1e-9)


def test_half_square_curvature_on_unit_interval():
    est = estimate_curvature(half_square(), np.zeros(1), 1.0, 2.0, 100_000, Rng(2))
    # Upper end carries the 1e-9 rounding allowance of the analytic-bound invariant.
    assert 3.8 <= est.value <= 4.0 + 1e-9
    assert est.samples == 100_000 and est.skipped == 0


def test_curvature_scales_with_lambda():
    a = estimate_curvature(half_square(), np.zeros(2), 1.0, 2.0, 3000, Rng(9))
    b = estimate_curvature(half_square(7.5), np.zeros(2), 1.0, 2.0, 3000, Rng(9))
    assert b.value == pytest.approx(7.5 * a.value, rel=1e-9)


@pytest.mark.parametrize("p", [1.0, 2.0, math.inf])
def test_curvature_history_monotone_and_below_analytic(p):
    history = []
    est = estimate_curvature(half_square(), np.array([0.3, -0.2]), 0.5, p, 2000, Rng(4), history)
    assert all(b >= a for a, b in zip(history, history[1:])) and history[-1] == est.value
    # For 0.5 * ||x||^2 the quantity is ||s - x||^2, at most the squared l2 diameter.
    diameter = {1.0: 1.0, 2.0: 1.0, math.inf: 1.0 * math.sqrt(2)}[p]
    assert est.value <= diameter ** 2 + 1e-9


def test_curvature_skips_non_finite():
    def f(x):
        if x[0] > 0.5:
            return math.inf, x
        return 0.5 * float(x @ x), x
    est = estimate_curvature(f, np.zeros(1), 1.0, 2.0, 2000, Rng(1))
    assert est.skipped > 0 and math.isfinite(est.value)


def test_curvature_argument_errors():
    with pytest.raises(ValueError):
        estimate_curvature(half_square(), np.zeros(1), 1.0, 2.0, 0, Rng(0))
    with pytest.raises(ValueError):
        estimate_curvature(half_square(), np.zeros(1), 0.0, 2.0, 5, Rng(0))


def test_lambda_examples():
    assert lambda_bound(0.1, 4.0, [0.0, 0.0]) == 0.0
    assert lambda_bound(0.1, 4.0, [1.0]) == pytest.approx(0.1)
    norms = [1.0, 0.5, 0.8]
    per_k = [2 * 0.2 * (k + 1) / 3.0 * g for k, g in enumerate(norms, start=1)]
    assert lambda_bound(0.2, 3.0, norms) == max(per_k)
    with pytest.raises(ValueError):
        lambda_bound(0.1, 4.0, [])
    with pytest.raises(ValueError):
        lambda_bound(0.1, 0.0, [1.0])
