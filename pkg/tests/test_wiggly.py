from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relstring import scenarios as sc
from relstring.curves import PiecewiseLinearLoop, uniform_grid
from relstring.dalembert import ConstraintMode, DAlembertPair, detect_collapse
from relstring.errors import BadParams, OddK, ParamsInfeasible
from relstring.wiggly import (
    SmoothingParams,
    approximate_string,
    evolution_sup_distance,
    normal_field,
    smooth_corner,
    smooth_corners,
    sup_distance_polylines,
    zigzag,
)


def _regular_polygon(sides: int) -> PiecewiseLinearLoop:
    """Unit-speed regular polygon inscribed in the unit circle."""
    side = 2 * math.sin(math.pi / sides)
    angles = (np.arange(sides) + 0.5) * 2 * np.pi / sides + np.pi / 2
    slopes = np.column_stack([np.cos(angles), np.sin(angles)])
    return PiecewiseLinearLoop(np.arange(sides + 1) * side, slopes, origin=(1.0, 0.0))


def test_normal_field_examples():
    assert np.allclose(normal_field([0.5, 0.0]), [0.0, math.sqrt(3) / 2], atol=1e-15)
    assert np.array_equal(normal_field([0.0, 1.0]), [0.0, 0.0]) or np.allclose(normal_field([0.0, 1.0]), 0.0)
    c = np.array([0.6, 0.0, 0.0])
    d = normal_field(c)
    assert np.allclose(d, [0.0, 0.8, 0.0], atol=1e-15)
    assert abs(c @ d) <= 1e-14 and abs(c @ c + d @ d - 1) <= 1e-14


def test_zigzag_of_unit_polyline_is_identity():
    sq = sc.square_loop(1.0)
    z = zigzag(sq, 4)
    s = np.linspace(0, 4, 801)
    assert np.allclose(z(s), sq(s), atol=1e-14)


def test_zigzag_of_flat_loop():
    flat = sc.flat_loop()
    z = zigzag(flat, 2)
    assert np.allclose(np.abs(z.slopes), [0.5, math.sqrt(3) / 2])
    assert sup_distance_polylines(z, flat) == pytest.approx(math.sqrt(3) / 4, abs=1e-14)


def test_zigzag_rejects_odd_or_fast_input():
    with pytest.raises(OddK):
        zigzag(sc.flat_loop(), 3)
    fast = PiecewiseLinearLoop([0.0, 1.0, 2.0], [[1.5, 0.0], [-1.5, 0.0]])
    with pytest.raises(BadParams):
        zigzag(fast, 2)


def test_zigzag_dense_distance_bound():
    a = PiecewiseLinearLoop([0.0, 1.0, 2.5, 3.0], [[0.6, 0.2], [-0.3, 0.1], [-0.3, -0.7]])
    k = 64
    z = zigzag(a, k)
    s = np.linspace(0, a.period, 20001)
    assert np.max(np.linalg.norm(z(s) - a(s), axis=1)) <= a.period / k
    assert np.allclose(np.linalg.norm(z.slopes, axis=1), 1.0, atol=1e-14)


def test_right_angle_corner():
    ell, eta = 0.3, 0.05
    c = smooth_corner([1.0, 0.0], [0.0, 1.0], ell, eta)
    assert abs(c.window_length() - ell) <= 1e-10
    assert abs(c.window_length_adaptive() - ell) <= 1e-10
    assert c.sup_distance() <= eta
    outside = np.concatenate([np.linspace(-ell, -ell / 2, 40), np.linspace(ell / 2, ell, 40)])
    assert np.array_equal(c.position(outside), c.wedge(outside))
    inside = np.linspace(-ell / 2, ell / 2, 501)
    assert np.allclose(np.linalg.norm(c.tangent(inside), axis=1), 1.0, atol=1e-12)
    assert c.junction_jump() <= 1e-6


def test_collinear_corner_needs_no_smoothing():
    assert smooth_corner([0.0, 1.0], [0.0, 1.0], 0.3, 0.05) is None


def test_reversal_is_infeasible():
    with pytest.raises(ParamsInfeasible):
        smooth_corner([1.0, 0.0], [-1.0, 0.0], 0.3, 0.05)


@settings(max_examples=15, deadline=None)
@given(theta=st.floats(0.05, math.pi - 0.05))
def test_corner_length_balance(theta):
    c = smooth_corner([1.0, 0.0], [math.cos(theta), math.sin(theta)], 0.3, 0.05)
    assert abs(c.window_length_adaptive() - 0.3) <= 1e-10
    assert c.sup_distance(401) <= 0.05


def test_smoothing_params_validation():
    with pytest.raises(OddK):
        SmoothingParams(3, 0.1, 0.01)
    with pytest.raises(BadParams):
        SmoothingParams(2, 0.3, 0.2)
    with pytest.raises(BadParams):
        SmoothingParams(2, 0.3, 0.05).check_against(sc.square_loop(1.0))


def test_smoothed_square_is_unit_speed():
    params = SmoothingParams(2, 0.15, 0.04)
    loop = smooth_corners(sc.square_loop(1.0), params)
    assert len(loop.corners) == 4
    s = np.linspace(0, 4, 8001)
    assert np.allclose(np.linalg.norm(loop.d1(s), axis=1), 1.0, atol=1e-10)
    assert abs(loop.length_defect()) <= 1e-10
    assert np.max(np.linalg.norm(loop(s) - sc.square_loop(1.0)(s), axis=1)) <= params.eta
    spline = loop.to_spline(2048)
    assert np.max(np.linalg.norm(spline(s) - loop(s), axis=1)) < 1e-4


def test_approximate_square_evolution():
    sq = sc.square_loop(1.0)
    target = sc.square(1.0)
    pair = approximate_string(sq, sq, 2)
    assert pair.mode is ConstraintMode.UNIT_SPEED
    eta = SmoothingParams.auto(2, zigzag(sq, 2)).eta
    dist = evolution_sup_distance(pair, target, np.linspace(0, 0.25, 26), 1024)
    assert dist <= 2 * eta


def test_approximate_polygon_collapses_near_quarter_period():
    poly = _regular_polygon(16)
    pair = approximate_string(poly, poly, 2)
    eta = SmoothingParams.auto(2, zigzag(poly, 2)).eta
    E = pair.period
    times = E / 4 + np.linspace(-0.05, 0.05, 101)
    radii = [detect_collapse(pair, t, 1024).max_deviation for t in times]
    t_star = times[int(np.argmin(radii))]
    assert abs(t_star - E / 4) <= 2 * eta
    assert min(radii) <= 2 * eta


def test_flat_loop_approximations_converge():
    flat = sc.flat_loop()
    target = DAlembertPair(flat, flat, ConstraintMode.SUB_UNIT)
    times = uniform_grid(flat.period, 8)
    dists = []
    for k in (8, 16, 32):
        pair = approximate_string(flat, flat, k)
        eta = SmoothingParams.auto(k, zigzag(flat, k)).eta
        d = evolution_sup_distance(pair, target, times, 1024)
        assert d <= flat.period / k + 2 * eta
        dists.append(d)
    assert dists[0] > dists[1] > dists[2]
