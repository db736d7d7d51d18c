from __future__ import annotations

import numpy as np
import pytest

from relstring import scenarios as sc
from relstring.curves import AnalyticLoop, circle_loop, uniform_grid
from relstring.dalembert import StringState, evaluate_state
from relstring.errors import NotNormalized, NotStrictlyAdmissible
from relstring.gauge import (
    conformal_normalize,
    orthogonal_gauge,
    recomposed_orthogonality,
    rho_profile,
)


def _radial(c):
    return AnalyticLoop(
        lambda s: c * np.column_stack([np.cos(s), np.sin(s)]),
        lambda s: c * np.column_stack([-np.sin(s), np.cos(s)]),
        lambda s: -c * np.column_stack([np.cos(s), np.sin(s)]),
        2 * np.pi,
        2,
    )


def test_circle_at_rest_is_already_normalized():
    curve, vel, report = conformal_normalize(circle_loop(1.0), None, 256)
    assert report.energy_parameter == pytest.approx(2 * np.pi, abs=1e-12)
    x = uniform_grid(curve.period, 256)
    assert np.max(np.linalg.norm(curve(x) - circle_loop(1.0)(x), axis=1)) < 1e-12
    assert not np.any(vel(x))


def test_inward_velocity_stretches_parameter():
    curve, vel, report = conformal_normalize(circle_loop(1.0), _radial(-0.6), 512)
    assert report.energy_parameter == pytest.approx(2.5 * np.pi, abs=1e-10)
    x = uniform_grid(curve.period, 512)
    assert np.allclose(np.linalg.norm(curve.d1(x), axis=1), 0.8, atol=1e-8)
    assert np.allclose(np.linalg.norm(vel(x), axis=1), 0.6, atol=1e-12)
    assert report.max_norm_residual < 1e-8


def test_light_speed_velocity_rejected():
    with pytest.raises(NotStrictlyAdmissible):
        conformal_normalize(circle_loop(1.0), _radial(1.0), 64)


def test_tangential_velocity_rejected():
    tangential = AnalyticLoop(
        lambda s: 0.3 * np.column_stack([-np.sin(s), np.cos(s)]),
        lambda s: 0.3 * np.column_stack([-np.cos(s), -np.sin(s)]),
        lambda s: 0.3 * np.column_stack([np.sin(s), -np.cos(s)]),
        2 * np.pi,
        2,
    )
    with pytest.raises(NotNormalized):
        conformal_normalize(circle_loop(1.0), tangential, 64)


def test_orthogonal_evolution_needs_no_reparametrization():
    pair = sc.circle(1.0)
    states = [evaluate_state(pair, t, 256) for t in np.linspace(0, 1.2, 40)]
    gauge = orthogonal_gauge(states)
    assert np.max(np.abs(gauge.r - gauge.x[None, :])) <= 1e-10


def test_single_slice_is_identity():
    gauge = orthogonal_gauge([evaluate_state(sc.circle(1.0), 0.0, 64)])
    assert np.array_equal(gauge.r[0], gauge.x)


def _sheared_state(pair, t, n, eps):
    x = uniform_grid(pair.period, n)
    y = x + eps * t
    gx = pair.gamma_x(t, y)
    return StringState(t, x, pair.gamma(t, y), pair.gamma_t(t, y) + eps * gx, gx, pair.period)


def test_sheared_circle_is_straightened():
    pair = sc.circle(1.0)
    n, eps = 512, 0.1
    h = pair.period / n
    times = np.arange(0, 200) * (h / 2)
    states = [_sheared_state(pair, t, n, eps) for t in times]
    gauge = orthogonal_gauge(states)
    # dr/dt = -eps exactly, so the labels drift back by eps t
    assert np.max(np.abs(gauge.r - (gauge.x[None, :] - eps * times[:, None]))) < 1e-10
    assert recomposed_orthogonality(states, gauge) <= 1e-6
    unfixed = max(abs(np.sum(s.gamma_t * s.gamma_x, axis=1)).max() for s in states[1:])
    assert unfixed > 1e-2


def test_rho_is_one_in_conformal_gauge():
    pair = sc.circle(1.0)
    for t in (0.0, 0.4, 1.2):
        assert np.allclose(rho_profile(evaluate_state(pair, t, 128)), 1.0, atol=1e-12)


def test_rho_of_unnormalized_circle_is_two():
    x = uniform_grid(2 * np.pi, 64)
    loop = _radial(2.0)
    state = StringState(0.0, x, loop(x), np.zeros((64, 2)), loop.d1(x), 2 * np.pi)
    assert np.allclose(rho_profile(state), 2.0)


def test_rho_rejects_light_speed():
    x = uniform_grid(2 * np.pi, 8)
    state = StringState(0.0, x, np.zeros((8, 2)), np.tile([1.0, 0.0], (8, 1)), np.zeros((8, 2)), 2 * np.pi)
    with pytest.raises(NotStrictlyAdmissible):
        rho_profile(state)
