from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from relstring.curves import (
    AnalyticLoop,
    CombinedLoop,
    IntegralLoop,
    PiecewiseLinearLoop,
    RescaledLoop,
    SplineLoop,
    arclength_reparametrize,
    circle_loop,
    ellipse_loop,
    periodic_interpolate,
    total_length,
    uniform_grid,
)
from relstring.errors import TooFewSamples
from relstring.scenarios import square_loop


@lru_cache
def _ellipse_perimeter_oracle(A=2.0, B=1.0):
    val, _ = quad(lambda s: math.hypot(A * math.sin(s), B * math.cos(s)), 0, 2 * math.pi,
                  epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def _circle_on_unit_interval(R=2.0):
    w = 2 * np.pi
    return AnalyticLoop(
        lambda s: R * np.column_stack([np.cos(w * s), np.sin(w * s)]),
        lambda s: R * w * np.column_stack([-np.sin(w * s), np.cos(w * s)]),
        lambda s: -R * w**2 * np.column_stack([np.cos(w * s), np.sin(w * s)]),
        1.0,
        2,
    )


def test_reparametrize_radius_two_circle_has_period_4pi():
    out = arclength_reparametrize(_circle_on_unit_interval(2.0), 512)
    assert out.period == pytest.approx(4 * np.pi, abs=1e-10)
    s = np.linspace(0, out.period, 3001)
    assert np.max(np.abs(out.speed(s) - 1.0)) < 1e-6


def test_reparametrize_unit_speed_circle_is_identity():
    circ = circle_loop(1.0)
    out = arclength_reparametrize(circ, 1024)
    assert out.period == pytest.approx(2 * np.pi, abs=1e-12)
    nodes = uniform_grid(out.period, 1024)
    assert np.max(np.linalg.norm(out(nodes) - circ(nodes), axis=1)) <= 1e-10
    s = np.linspace(0, 2 * np.pi, 5001)
    assert np.max(np.linalg.norm(out(s) - circ(s), axis=1)) <= 1e-10


def test_reparametrize_ellipse_period_matches_quadrature():
    out = arclength_reparametrize(ellipse_loop(2.0, 1.0), 1024)
    assert abs(out.period - _ellipse_perimeter_oracle()) <= 1e-8


def test_total_length_examples():
    assert total_length(circle_loop(1.0)) == pytest.approx(2 * np.pi, abs=1e-13)
    assert total_length(square_loop(1.5)) == 6.0
    assert abs(total_length(ellipse_loop(2.0, 1.0)) - _ellipse_perimeter_oracle()) <= 1e-10


def test_periodic_interpolate_reproduces_samples():
    s = uniform_grid(2 * np.pi, 16)
    samples = np.column_stack([np.cos(s), np.sin(s)])
    loop = periodic_interpolate(samples, 2 * np.pi)
    assert np.array_equal(loop(s), samples) or np.max(np.abs(loop(s) - samples)) < 1e-15


def test_periodic_interpolate_too_few_samples():
    with pytest.raises(TooFewSamples):
        periodic_interpolate(np.zeros((2, 2)), 1.0)


def test_periodic_interpolate_fourth_order_error():
    errs = []
    dense = np.linspace(0, 2 * np.pi, 4001)
    exact = np.column_stack([np.cos(dense), np.sin(dense)])
    for n in (64, 128):
        s = uniform_grid(2 * np.pi, n)
        loop = periodic_interpolate(np.column_stack([np.cos(s), np.sin(s)]), 2 * np.pi)
        errs.append(np.max(np.linalg.norm(loop(dense) - exact, axis=1)))
    assert errs[0] <= 1e-5
    assert math.log2(errs[0] / errs[1]) > 3.5


def test_spline_is_periodic():
    s = uniform_grid(1.0, 32)
    loop = SplineLoop(np.column_stack([np.sin(2 * np.pi * s), np.cos(4 * np.pi * s)]), 1.0)
    x = np.linspace(-0.3, 0.7, 17)
    assert np.allclose(loop(x), loop(x + 3.0), atol=1e-14)
    assert np.allclose(loop.d1(x), loop.d1(x - 1.0), atol=1e-12)


def test_polyline_evaluation_and_closure():
    sq = square_loop(1.0)
    assert np.allclose(sq(np.array([0.0, 1.0, 2.0, 3.0, 4.0])),
                       [[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5], [-0.5, -0.5]])
    assert np.allclose(sq.d1(np.array([0.5, 1.5])), [[1, 0], [0, 1]])
    assert not np.any(sq.d2(np.array([0.3, 2.2])))
    with pytest.raises(ValueError):
        PiecewiseLinearLoop([0.0, 1.0, 2.0], [[1.0, 0.0], [0.0, 1.0]])


def test_rescaled_and_combined_loops():
    circ = circle_loop(1.0)
    big = RescaledLoop(circ, scale=2.0, stretch=2.0)
    s = np.linspace(0, 4 * np.pi, 9)
    assert big.period == pytest.approx(4 * np.pi)
    assert np.allclose(big(s), 2 * circ(s / 2))
    assert np.allclose(np.linalg.norm(big.d1(s), axis=1), 1.0)
    diff = CombinedLoop([(1.0, circ), (-1.0, circ)])
    assert np.allclose(diff(s), 0.0)


def test_integral_loop_is_antiderivative():
    circ = circle_loop(1.0)
    V = IntegralLoop(circ)
    s = np.linspace(0, 2 * np.pi, 11)
    exact = np.column_stack([np.sin(s), 1.0 - np.cos(s)])
    assert np.allclose(V(s), exact, atol=1e-13)
    assert np.allclose(V.mean_drift, 0.0, atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(scale=st.floats(0.1, 10.0), stretch=st.floats(0.2, 5.0))
def test_total_length_is_homogeneous(scale, stretch):
    loop = RescaledLoop(ellipse_loop(2.0, 1.0), scale=scale, stretch=stretch)
    assert total_length(loop) == pytest.approx(scale * _ellipse_perimeter_oracle(), rel=1e-10)
