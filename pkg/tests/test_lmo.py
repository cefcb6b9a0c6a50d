import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fwrnn.lmo import lmo_l1_ball, lmo_lp_ball
from fwrnn.numerics import NonFiniteError, Rng, dual_exponent, lp_norm

P_VALUES = [1.0, 1.5, 2.0, 3.0, math.inf]


def random_ball_points(rng, n, dim, p, delta):
    """Points with ||s||_p <= delta: random directions scaled to the sphere, then shrunk."""
    u = rng.normal((n, dim))
    if math.isinf(p):
        norms = np.abs(u).max(axis=1)
    else:
        norms = (np.abs(u) ** p).sum(axis=1) ** (1 / p)
    radius = delta * np.where(rng.uniform(n) < 0.5, 1.0, rng.uniform(n))
    return u / norms[:, None] * radius[:, None]


def test_p2_closed_form():
    r = lmo_lp_ball([3, 4], 2, 1.0)
    np.testing.assert_allclose(r.direction, [-0.6, -0.8], atol=1e-15)
    assert r.attained_value == pytest.approx(-5.0, rel=1e-15)


def test_pinf_sign_rule_with_zero_coordinate():
    r = lmo_lp_ball([0.5, -2, 0], math.inf, 0.1)
    np.testing.assert_array_equal(r.direction, [-0.1, 0.1, 0.0])
    assert r.attained_value == pytest.approx(-0.25)


def test_p4_against_sphere_search_and_dual_norm():
    # Oracle 1: dense parametrisation of the l4 unit sphere in 2-d.
    theta = np.linspace(0, 2 * np.pi, 2_000_001)
    c, s = np.cos(theta), np.sin(theta)
    scale = (c ** 4 + s ** 4) ** 0.25
    x, y = c / scale, s / scale
    i = np.argmin(x + 2 * y)
    # Oracle 2: the dual-norm value -||g||_{4/3} in high precision.
    mpmath.mp.dps = 30
    dual = -float((1 + mpmath.mpf(2) ** (mpmath.mpf(4) / 3)) ** (mpmath.mpf(3) / 4))

    r = lmo_lp_ball([1, 2], 4, 1.0)
    np.testing.assert_allclose(r.direction, [x[i], y[i]], atol=1e-5)
    np.testing.assert_allclose(r.direction, [-0.730078, -0.919841], atol=1e-6)
    assert r.attained_value == pytest.approx(dual, rel=1e-12)
    assert r.attained_value == pytest.approx(-2.569759, abs=1e-6)
    assert x[i] + 2 * y[i] >= r.attained_value - 1e-12


def test_l1_vertex():
    r = lmo_l1_ball([1, -3, 2], 2.0)
    np.testing.assert_array_equal(r.direction, [0, 2, 0])
    assert r.attained_value == -6.0


def test_l1_zero_gradient():
    r = lmo_l1_ball(np.zeros(3), 1.0)
    assert not np.any(r.direction) and r.attained_value == 0.0


def test_l1_tie_breaks_to_lowest_index():
    np.testing.assert_array_equal(lmo_l1_ball([2, -2, 1], 1.0).direction, [-1, 0, 0])


def test_l1_matches_vertex_enumeration():
    rng = Rng(17)
    for _ in range(50):
        g = rng.normal(4)
        vertices = [sign * 1.5 * np.eye(4)[i] for i, sign in itertools.product(range(4), (1, -1))]
        best = min(float(np.dot(v, g)) for v in vertices)
        assert lmo_l1_ball(g, 1.5).attained_value == pytest.approx(best, rel=1e-15)


def test_lp_dispatches_p1():
    np.testing.assert_array_equal(lmo_lp_ball([1, -3, 2], 1, 2.0).direction, [0, 2, 0])


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, math.inf])
def test_zero_gradient_gives_zero_direction(p):
    r = lmo_lp_ball(np.zeros(4), p, 0.3)
    assert not np.any(r.direction) and r.attained_value == 0.0


def test_errors():
    with pytest.raises(ValueError):
        lmo_lp_ball([1.0], 0.5, 1.0)
    with pytest.raises(ValueError):
        lmo_lp_ball([1.0], 2, 0.0)
    with pytest.raises(NonFiniteError):
        lmo_lp_ball([1.0, math.nan], 2, 1.0)
    with pytest.raises(NonFiniteError):
        lmo_l1_ball([math.inf], 1.0)


@pytest.mark.parametrize("p", P_VALUES)
def test_direction_on_sphere_and_dual_identity(p):
    rng = Rng(101)
    q = dual_exponent(p)
    for _ in range(200):
        g = rng.normal(rng.integers(1, 6)) * 10 ** rng.uniform(None, -3, 3)
        delta = 10 ** rng.uniform(None, -2, 1)
        r = lmo_lp_ball(g, p, delta)
        assert lp_norm(r.direction, p) == pytest.approx(delta, rel=1e-9)
        assert r.attained_value == pytest.approx(-delta * lp_norm(g, q), rel=1e-9)


@pytest.mark.parametrize("p", P_VALUES)
def test_optimality_against_random_feasible_points(p):
    rng = Rng(int(7 * min(p, 50)))
    for _ in range(20):
        dim = rng.integers(1, 6)
        g = rng.normal(dim)
        r = lmo_lp_ball(g, p, 0.7)
        pts = random_ball_points(rng, 20_000, dim, p, 0.7)
        assert r.attained_value <= float((pts @ g).min()) + 1e-9


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=6),
       st.floats(1e-3, 1e3), st.sampled_from(P_VALUES))
def test_scale_equivariance(g, c, p):
    g = np.array(g)
    a, b = lmo_lp_ball(g, p, 0.5).direction, lmo_lp_ball(c * g, p, 0.5).direction
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12)


def test_limits_approach_special_cases():
    rng = Rng(3)
    for _ in range(20):
        g = rng.normal(5)
        two = lmo_lp_ball(g, 2.0, 1.0).direction
        for p in (2 - 1e-6, 2 + 1e-6):
            np.testing.assert_allclose(lmo_lp_ball(g, p, 1.0).direction, two, atol=1e-3)
        np.testing.assert_allclose(lmo_lp_ball(g, 1e6, 1.0).direction, -np.sign(g), atol=1e-3)
