"""Gauge normalization of string data.

Two conditions are enforced: orthogonality ``<gamma_t, gamma_x> = 0`` for all
times, and the conformal condition ``|gamma_t|^2 + |gamma_x|^2 = 1`` at the
initial time (it then persists along the evolution).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .config import DEFAULT_TOLERANCES, ToleranceConfig
from .curves import PeriodicLoop, reparametrize_by_weight, zero_loop
from .dalembert import StringState, is_zero_loop
from .errors import MonotonicityLost, NonRegularCurve, NotNormalized, NotStrictlyAdmissible


@dataclass(frozen=True)
class GaugeReport:
    energy_parameter: float
    max_orthogonality_residual: float
    max_norm_residual: float


def conformal_normalize(
    curve: PeriodicLoop,
    velocity: PeriodicLoop | None,
    n: int,
    tol: ToleranceConfig = DEFAULT_TOLERANCES,
) -> tuple[PeriodicLoop, PeriodicLoop, GaugeReport]:
    """Reparametrize initial data so that ``|gamma_x|^2 = 1 - |gamma_t|^2``.

    The new parameter is ``x(s) = int_0^s |gamma'| / sqrt(1 - |v_0|^2)``; its
    total, the energy parameter ``E``, is the new period. The velocity must
    be normal to the curve and strictly sub-luminal.
    """
    probe = np.linspace(0.0, curve.period, 4 * n, endpoint=False)
    tangent = curve.d1(probe)
    speed = np.linalg.norm(tangent, axis=1)
    if np.min(speed) < tol.regular:
        raise NonRegularCurve(f"min |curve'| = {np.min(speed):.3e}")
    zero = velocity is None or is_zero_loop(velocity)
    if zero:
        vel_sq = lambda s: 0.0  # noqa: E731
    else:
        if abs(velocity.period - curve.period) > 1e-9 * curve.period:
            raise ValueError("velocity and curve periods differ")
        v = velocity(probe)
        vmax = float(np.max(np.linalg.norm(v, axis=1)))
        if vmax >= 1.0 - tol.admissible:
            raise NotStrictlyAdmissible(f"max |v_0| = {vmax:.12g}")
        tangential = np.abs(np.sum(v * tangent, axis=1)) / speed
        if np.max(tangential) > tol.gauge:
            raise NotNormalized(
                f"velocity has a tangential component up to {np.max(tangential):.3e}"
            )
        vel_sq = lambda s: np.sum(velocity(s) ** 2, axis=-1)  # noqa: E731

    def weight(s):
        return curve.speed(s) / np.sqrt(1.0 - vel_sq(s))

    extra = [] if zero else [velocity]
    new_curve, resampled, _ = reparametrize_by_weight(curve, weight, n, extra=extra)
    E = new_curve.period
    new_velocity = zero_loop(E, curve.dim) if zero else resampled[0]

    nodes = new_curve.check_nodes()
    gx = new_curve.d1(nodes)
    gt = new_velocity(nodes)
    report = GaugeReport(
        energy_parameter=E,
        max_orthogonality_residual=float(np.max(np.abs(np.sum(gt * gx, axis=1)))),
        max_norm_residual=float(np.max(np.abs(np.sum(gx**2 + gt**2, axis=1) - 1.0))),
    )
    return new_curve, new_velocity, report


def _periodic_spline(x: np.ndarray, values: np.ndarray, period: float) -> CubicSpline:
    knots = np.append(x, period)
    vals = np.concatenate([values, values[:1]], axis=0)
    return CubicSpline(knots, vals, axis=0, bc_type="periodic")


@dataclass(frozen=True)
class GaugeMap:
    """Old parameter ``r(t_k, x_j)`` of the orthogonally reparametrized map."""

    times: np.ndarray
    x: np.ndarray
    r: np.ndarray
    period: float


def _transport_speed(state: StringState, tol: ToleranceConfig) -> CubicSpline:
    speed2 = np.sum(state.gamma_x**2, axis=1)
    if np.sqrt(np.min(speed2)) < tol.regular_slice:
        raise NonRegularCurve(f"slice t={state.t:g} has min |gamma_x| = {np.sqrt(np.min(speed2)):.3e}")
    c = np.sum(state.gamma_t * state.gamma_x, axis=1) / speed2
    return _periodic_spline(state.x, c, state.period)


def orthogonal_gauge(
    states: Sequence[StringState],
    tol: ToleranceConfig = DEFAULT_TOLERANCES,
) -> GaugeMap:
    """Reparametrization ``r(t, x)`` making ``gamma(t, r(t, x))`` orthogonal.

    Orthogonality of the recomposed map requires, along each material label
    ``x``, ``dr/dt = -c(t, r)`` with ``c = <gamma_t, gamma_x> / |gamma_x|^2``;
    this is integrated per node with classical RK4 from ``r(0, x) = x``.
    Stage values between two slices use the linear-in-time interpolant of
    ``c``, so the scheme is second order in the slice spacing.
    """
    states = list(states)
    if not states:
        raise ValueError("need at least one state")
    x = states[0].x
    period = states[0].period
    times = np.array([s.t for s in states])
    for s in states:
        if s.n_nodes != len(x) or not np.allclose(s.x, x, rtol=0, atol=1e-14 * period):
            raise ValueError("all states must share one grid")
    if len(states) > 1:
        dts = np.diff(times)
        if np.any(dts <= 0) or np.ptp(dts) > 1e-9 * abs(dts[0]):
            raise ValueError("states must be sampled at uniform increasing times")

    speeds = [_transport_speed(s, tol) for s in states]
    r = np.empty((len(states), len(x)))
    r[0] = x
    for k in range(len(states) - 1):
        dt = times[k + 1] - times[k]
        ck, ck1 = speeds[k], speeds[k + 1]

        def rhs(y, theta):
            yy = np.mod(y, period)
            return -((1 - theta) * ck(yy) + theta * ck1(yy))

        y = r[k]
        k1 = rhs(y, 0.0)
        k2 = rhs(y + 0.5 * dt * k1, 0.5)
        k3 = rhs(y + 0.5 * dt * k2, 0.5)
        k4 = rhs(y + dt * k3, 1.0)
        r[k + 1] = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        gaps = np.diff(np.append(r[k + 1], r[k + 1][0] + period))
        if np.any(gaps <= 0):
            raise MonotonicityLost(f"r(t={times[k + 1]:g}, .) is not increasing; reduce the time step")
    return GaugeMap(times, x, r, period)


def recompose(states: Sequence[StringState], gauge: GaugeMap) -> np.ndarray:
    """Positions ``gamma(t_k, r(t_k, x_j))``, shape ``(M, N, n)``."""
    out = []
    for state, rk in zip(states, gauge.r):
        spline = _periodic_spline(state.x, state.gamma, state.period)
        out.append(spline(np.mod(rk, state.period)))
    return np.array(out)


def recomposed_orthogonality(states: Sequence[StringState], gauge: GaugeMap) -> float:
    """Max ``|<g_t, g_x>|`` of the recomposed map, both derivatives by central
    differences (interior time levels only)."""
    g = recompose(states, gauge)
    if len(g) < 3:
        return 0.0
    dt = gauge.times[1] - gauge.times[0]
    h = gauge.period / len(gauge.x)
    gt = (g[2:] - g[:-2]) / (2 * dt)
    mid = g[1:-1]
    gx = (np.roll(mid, -1, axis=1) - np.roll(mid, 1, axis=1)) / (2 * h)
    return float(np.max(np.abs(np.sum(gt * gx, axis=2))))


def rho_profile(state: StringState) -> np.ndarray:
    """``|gamma_x| / sqrt(1 - |gamma_t|^2)`` at each node."""
    vt = np.linalg.norm(state.gamma_t, axis=1)
    if np.max(vt) >= 1.0:
        raise NotStrictlyAdmissible(f"max |gamma_t| = {np.max(vt):.12g}")
    return np.linalg.norm(state.gamma_x, axis=1) / np.sqrt(1.0 - vt**2)
