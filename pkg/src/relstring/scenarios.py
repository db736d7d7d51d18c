"""Closed-form and constructed initial data for the worked examples.

Each builder returns :class:`DAlembertPair` objects; :func:`build` wraps
them with a :class:`ScenarioSpec` carrying the facts a test (or the CLI
manifest) can check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.special import ellipe, ellipeinc

from .curves import AnalyticLoop, PeriodicLoop, PiecewiseLinearLoop, RescaledLoop, circle_loop, ellipse_loop
from .dalembert import ConstraintMode, DAlembertPair
from .errors import BadEps, BadParams, NotConvex, WrongDimension

_NEU_M = 8.0 / 9.0


def circle(R: float = 1.0) -> DAlembertPair:
    """``a = b`` = unit-speed circle of radius ``R``; collapses at ``E/4``."""
    if not R > 0:
        raise BadParams("R must be positive")
    loop = circle_loop(R)
    return DAlembertPair(loop, loop, ConstraintMode.UNIT_SPEED)


def cylinder(A: PeriodicLoop | None = None, eps: float = 0.125) -> DAlembertPair:
    """``a(s) = 2 A(s/2)``, ``b(s) = eps A(s/eps)`` on period ``2L``.

    ``b`` must close up on ``[0, 2L]``, i.e. ``2/eps`` is an integer.
    """
    if A is None:
        A = circle_loop(1.0)
    if not 0 < eps < 1:
        raise BadEps(f"eps must lie in (0, 1), got {eps}")
    ratio = 2.0 / eps
    if abs(ratio - round(ratio)) > 1e-9 * ratio:
        raise BadEps(f"2/eps must be an integer, got {ratio}")
    L = A.period
    a = RescaledLoop(A, scale=2.0, stretch=2.0)
    b = RescaledLoop(A, scale=eps, stretch=eps, period=2 * L)
    return DAlembertPair(a, b, ConstraintMode.UNIT_SPEED)


def neu_alpha() -> float:
    """Mean of ``sqrt(5/4 + cos)`` over a period, by adaptive quadrature."""
    val, _ = quad(lambda s: math.sqrt(1.25 + math.cos(s)), 0.0, 2 * math.pi, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val / (2 * math.pi)


class _NeuClock:
    """``s_n(x) = int_0^x sqrt(5/4 + cos(m u)) du`` (``m = n - 1``) and its
    inverse ``x_n``, via ``sqrt(5/4 + cos r) = 3/2 sqrt(1 - 8/9 sin^2(r/2))``."""

    def __init__(self, n: int):
        self.m = n - 1
        self.cell = 6.0 * ellipe(_NEU_M)  # s-length of one oscillation, times m

    @staticmethod
    def _g(r):
        return 3.0 * ellipeinc(0.5 * r, _NEU_M)

    @staticmethod
    def _dg(r):
        return np.sqrt(1.25 + np.cos(r))

    def s_of_x(self, x):
        y = self.m * np.asarray(x, float)
        q = np.floor(y / (2 * np.pi))
        return (q * self.cell + self._g(y - 2 * np.pi * q)) / self.m

    def x_of_s(self, s):
        z = self.m * np.asarray(s, float)
        q = np.floor(z / self.cell)
        target = z - q * self.cell
        lo = np.zeros_like(target)
        hi = np.full_like(target, 2 * np.pi)
        r = target * (2 * np.pi / self.cell)
        for _ in range(60):
            f = self._g(r) - target
            lo = np.where(f < 0, r, lo)
            hi = np.where(f > 0, r, hi)
            r_new = r - f / self._dg(r)
            r_new = np.where((r_new <= lo) | (r_new >= hi), 0.5 * (lo + hi), r_new)
            done = np.max(np.abs(r_new - r)) < 1e-15
            r = r_new
            if done:
                break
        return (2 * np.pi * q + r) / self.m

    def dx(self, x):
        return 1.0 / np.sqrt(1.25 + np.cos(self.m * x))

    def ddx(self, x):
        # d/ds of x_n' = x_n' * d/dx (5/4 + cos m x)^(-1/2)
        w = 1.25 + np.cos(self.m * x)
        return self.dx(x) * 0.5 * self.m * np.sin(self.m * x) * w**-1.5


def _unit_circle_parts(u):
    return np.column_stack([np.cos(u), np.sin(u)])


def neu_b(n: int) -> AnalyticLoop:
    """``b_n(s) = a(x_n(s)) + a(n x_n(s)) / (2n)`` with ``a`` the unit circle."""
    if n < 2:
        raise BadParams("n must be >= 2")
    clock = _NeuClock(n)
    period = clock.s_of_x(2 * np.pi).item()

    def f(s):
        x = clock.x_of_s(s)
        return _unit_circle_parts(x) + _unit_circle_parts(n * x) / (2 * n)

    def core(x):
        # a'(x) + a'(n x) / 2 and its x-derivative
        d = np.column_stack([-np.sin(x), np.cos(x)]) + 0.5 * np.column_stack([-np.sin(n * x), np.cos(n * x)])
        dd = -_unit_circle_parts(x) - 0.5 * n * _unit_circle_parts(n * x)
        return d, dd

    def df(s):
        x = clock.x_of_s(s)
        d, _ = core(x)
        return clock.dx(x)[:, None] * d

    def ddf(s):
        x = clock.x_of_s(s)
        d, dd = core(x)
        return clock.ddx(x)[:, None] * d + (clock.dx(x) ** 2)[:, None] * dd

    return AnalyticLoop(f, df, ddf, period, 2, name=f"neu_b(n={n})")


def _scaled_circle(scale: float, stretch: float, period: float, name: str) -> AnalyticLoop:
    """``scale * (cos(s/stretch), sin(s/stretch))``."""
    return AnalyticLoop(
        lambda s: scale * _unit_circle_parts(s / stretch),
        lambda s: (scale / stretch) * np.column_stack([-np.sin(s / stretch), np.cos(s / stretch)]),
        lambda s: -(scale / stretch**2) * _unit_circle_parts(s / stretch),
        period,
        2,
        name=name,
    )


def neu(n: int) -> tuple[DAlembertPair, DAlembertPair]:
    """Oscillating unit-speed pair ``(a_n, b_n)`` and its SubUnit limit
    ``(alpha a(s/alpha), a(s/alpha))``."""
    b = neu_b(n)
    ell = b.period
    a = _scaled_circle(ell / (2 * np.pi), ell / (2 * np.pi), ell, f"neu_a(n={n})")
    pair = DAlembertPair(a, b, ConstraintMode.UNIT_SPEED)
    return pair, neu_limit()


def neu_limit() -> DAlembertPair:
    alpha = neu_alpha()
    period = 2 * np.pi * alpha
    a = _scaled_circle(alpha, alpha, period, "neu_limit_a")
    b = _scaled_circle(1.0, alpha, period, "neu_limit_b")
    return DAlembertPair(a, b, ConstraintMode.SUB_UNIT)


def _cyl(theta):
    c, s = np.cos(theta), np.sin(theta)
    z = np.zeros_like(theta)
    e_r = np.column_stack([c, s, z])
    e_t = np.column_stack([-s, c, z])
    e_z = np.column_stack([z, z, np.ones_like(theta)])
    return e_r, e_t, e_z


def _helix_a(shift: float, scale: float = 1.0) -> AnalyticLoop:
    """``scale * e_theta(theta + shift)``."""

    def f(th):
        return scale * _cyl(th + shift)[1]

    def df(th):
        return -scale * _cyl(th + shift)[0]

    def ddf(th):
        return -scale * _cyl(th + shift)[1]

    return AnalyticLoop(f, df, ddf, 2 * np.pi, 3, name=f"helix_a(shift={shift:g})")


def helical_b(alpha: float, beta: float, n: int) -> AnalyticLoop:
    k = n * n - 1.0

    def f(th):
        e_r, e_t, e_z = _cyl(th)
        sn, cn = np.sin(n * th)[:, None], np.cos(n * th)[:, None]
        return alpha * e_t + beta * (e_t * sn * n / k - e_r * cn / k + e_z * cn / n)

    def df(th):
        e_r, e_t, e_z = _cyl(th)
        sn, cn = np.sin(n * th)[:, None], np.cos(n * th)[:, None]
        return -alpha * e_r + beta * e_t * cn - beta * e_z * sn

    def ddf(th):
        e_r, e_t, e_z = _cyl(th)
        sn, cn = np.sin(n * th)[:, None], np.cos(n * th)[:, None]
        return -alpha * e_t + beta * (-e_r * cn - n * e_t * sn) - beta * n * e_z * cn

    return AnalyticLoop(f, df, ddf, 2 * np.pi, 3, name=f"helical_b(n={n})")


def helical3d(alpha: float = 0.6, beta: float = 0.8, n: int = 7, phi: float = 0.0) -> tuple[DAlembertPair, DAlembertPair]:
    """Three-dimensional oscillating pair and its limit ``(a, alpha e_theta)``;
    ``a`` is ``e_theta`` rotated by ``2 phi``."""
    if abs(alpha**2 + beta**2 - 1.0) > 1e-12 or not (-1 < alpha < 1 and -1 < beta < 1):
        raise BadParams("need alpha^2 + beta^2 = 1 with alpha, beta in (-1, 1)")
    if n < 2:
        raise BadParams("n must be >= 2")
    a = _helix_a(2 * phi)
    pair = DAlembertPair(a, helical_b(alpha, beta, n), ConstraintMode.UNIT_SPEED)
    limit = DAlembertPair(a, _helix_a(0.0, alpha), ConstraintMode.SUB_UNIT)
    return pair, limit


def square_loop(L: float = 1.0) -> PiecewiseLinearLoop:
    """Counter-clockwise arc-length boundary of ``[-L/2, L/2]^2`` starting at
    the corner ``(-L/2, -L/2)``."""
    if not L > 0:
        raise BadParams("L must be positive")
    slopes = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    return PiecewiseLinearLoop(np.arange(5) * L, slopes, origin=(-L / 2, -L / 2))


def square(L: float = 1.0) -> DAlembertPair:
    loop = square_loop(L)
    return DAlembertPair(loop, loop, ConstraintMode.UNIT_SPEED)


def square_octagon_vertices(L: float, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of ``Q_0 ∩ {|x1| + |x2| <= L - t}`` for ``0 <= t <= L/2``,
    counter-clockwise from the bottom side, and the parameters where the
    evolution attains them (``x = k L +- t``)."""
    if not 0 <= t <= L / 2:
        raise BadParams("octagon phase is 0 <= t <= L/2")
    h, c = L / 2, L / 2 - t
    verts = np.array([[-c, -h], [c, -h], [h, -c], [h, c], [c, h], [-c, h], [-h, c], [-h, -c]])
    params = np.array([t, L - t, L + t, 2 * L - t, 2 * L + t, 3 * L - t, 3 * L + t, 4 * L - t])
    return verts, params


def flat_loop() -> PiecewiseLinearLoop:
    """Back-and-forth segment: slope ``(1/2, 0)`` on ``[0, 1]``, ``(-1/2, 0)``
    on ``[1, 2]``."""
    return PiecewiseLinearLoop([0.0, 1.0, 2.0], [[0.5, 0.0], [-0.5, 0.0]])


def oval_loop(eps: float = 0.1) -> AnalyticLoop:
    """Centrally symmetric convex oval ``e^{is} + eps e^{-3is}``."""
    if not 0 <= eps < 1 / 9:
        raise BadParams("oval needs 0 <= eps < 1/9 (monotone turning)")
    return AnalyticLoop(
        lambda s: np.column_stack([np.cos(s) + eps * np.cos(3 * s), np.sin(s) - eps * np.sin(3 * s)]),
        lambda s: np.column_stack([-np.sin(s) - 3 * eps * np.sin(3 * s), np.cos(s) - 3 * eps * np.cos(3 * s)]),
        lambda s: np.column_stack([-np.cos(s) - 9 * eps * np.cos(3 * s), -np.sin(s) + 9 * eps * np.sin(3 * s)]),
        2 * np.pi,
        2,
        name=f"oval(eps={eps:g})",
    )


def egg_loop(eps: float = 0.2) -> AnalyticLoop:
    """Polar curve ``r = 1 + eps cos(theta)``; convex and not centrally symmetric."""
    if not 0 <= eps < 0.5:
        raise BadParams("egg needs 0 <= eps < 1/2")

    def f(th):
        r = 1 + eps * np.cos(th)
        return np.column_stack([r * np.cos(th), r * np.sin(th)])

    def df(th):
        r, dr = 1 + eps * np.cos(th), -eps * np.sin(th)
        return np.column_stack([dr * np.cos(th) - r * np.sin(th), dr * np.sin(th) + r * np.cos(th)])

    def ddf(th):
        r, dr, ddr = 1 + eps * np.cos(th), -eps * np.sin(th), -eps * np.cos(th)
        return np.column_stack([
            ddr * np.cos(th) - 2 * dr * np.sin(th) - r * np.cos(th),
            ddr * np.sin(th) + 2 * dr * np.cos(th) - r * np.sin(th),
        ])

    return AnalyticLoop(f, df, ddf, 2 * np.pi, 2, name=f"egg(eps={eps:g})")


def convex_zero_velocity(curve: PeriodicLoop, n: int = 1024) -> DAlembertPair:
    """Zero-velocity pair ``a = b`` = arc-length spline of a uniformly convex
    counter-clockwise planar curve."""
    from .gauge import conformal_normalize

    if curve.dim != 2:
        raise WrongDimension("convex_zero_velocity is planar")
    s = np.linspace(0.0, curve.period, 4 * n, endpoint=False)
    d1, d2 = curve.d1(s), curve.d2(s)
    turning = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    if np.min(turning) <= 0:
        raise NotConvex(f"curve is not uniformly convex counter-clockwise (min turning {np.min(turning):.3e})")
    a, _, _ = conformal_normalize(curve, None, n)
    return DAlembertPair(a, a, ConstraintMode.UNIT_SPEED)


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    dimension: int
    parameters: dict
    expected: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    spec: ScenarioSpec
    pair: DAlembertPair
    limit: DAlembertPair | None = None


def _circle_scenario(R=1.0):
    E = 2 * math.pi * R
    return Scenario(ScenarioSpec("circle", 2, {"R": R}, {"period": E, "collapse_time": E / 4, "energy": E}), circle(R))


def _cylinder_scenario(eps=0.125, R=1.0):
    pair = cylinder(circle_loop(R), eps)
    return Scenario(ScenarioSpec("cylinder", 2, {"eps": eps, "R": R}, {"period": pair.period}), pair)


def _neu_scenario(n=5):
    pair, limit = neu(int(n))
    alpha = neu_alpha()
    exp = {"period": pair.period, "alpha": alpha, "limit_min_abs_gamma": (alpha - 1) / 2}
    return Scenario(ScenarioSpec("neu", 2, {"n": int(n)}, exp), pair, limit)


def _neu_limit_scenario():
    limit = neu_limit()
    alpha = neu_alpha()
    exp = {"period": limit.period, "alpha": alpha, "b_speed": 1 / alpha, "min_abs_gamma": (alpha - 1) / 2}
    return Scenario(ScenarioSpec("neu_limit", 2, {}, exp), limit)


def _helical_scenario(alpha=0.6, beta=0.8, n=7, phi=0.0):
    pair, limit = helical3d(alpha, beta, int(n), phi)
    exp = {"period": 2 * math.pi, "limit_min_abs_gamma": (1 - abs(alpha)) / 2}
    params = {"alpha": alpha, "beta": beta, "n": int(n), "phi": phi}
    return Scenario(ScenarioSpec("helical3d", 3, params, exp), pair, limit)


def _helical_limit_scenario(alpha=0.6, beta=0.8, phi=0.0):
    _, limit = helical3d(alpha, beta, 2, phi)
    exp = {"period": 2 * math.pi, "min_abs_gamma": (1 - abs(alpha)) / 2}
    return Scenario(ScenarioSpec("helical3d_limit", 3, {"alpha": alpha, "beta": beta, "phi": phi}, exp), limit)


def _square_scenario(L=1.0):
    exp = {"period": 4 * L, "collapse_time": L, "collapse_point": [0.0, 0.0], "energy_plateau": 4 * L}
    return Scenario(ScenarioSpec("square", 2, {"L": L}, exp), square(L))


def _ellipse_scenario(a=2.0, b=1.0, N=1024):
    pair = convex_zero_velocity(ellipse_loop(a, b), int(N))
    exp = {"period": pair.period, "collapse_time": pair.period / 4}
    return Scenario(ScenarioSpec("ellipse", 2, {"a": a, "b": b, "N": int(N)}, exp), pair)


def _oval_scenario(eps=0.1, N=1024):
    pair = convex_zero_velocity(oval_loop(eps), int(N))
    exp = {"period": pair.period, "collapse_time": pair.period / 4}
    return Scenario(ScenarioSpec("oval", 2, {"eps": eps, "N": int(N)}, exp), pair)


def _egg_scenario(eps=0.2, N=1024):
    pair = convex_zero_velocity(egg_loop(eps), int(N))
    return Scenario(ScenarioSpec("egg", 2, {"eps": eps, "N": int(N)}, {"period": pair.period}), pair)


REGISTRY: dict[str, Callable[..., Scenario]] = {
    "circle": _circle_scenario,
    "cylinder": _cylinder_scenario,
    "neu": _neu_scenario,
    "neu_limit": _neu_limit_scenario,
    "helical3d": _helical_scenario,
    "helical3d_limit": _helical_limit_scenario,
    "square": _square_scenario,
    "ellipse": _ellipse_scenario,
    "oval": _oval_scenario,
    "egg": _egg_scenario,
}


def scenario_names() -> list[str]:
    return sorted(REGISTRY)


def build(name: str, **params) -> Scenario:
    """Build a registered scenario; unknown names raise ``KeyError`` and
    unknown parameters ``TypeError``."""
    if name not in REGISTRY:
        raise KeyError(f"unknown scenario {name!r}; known: {', '.join(scenario_names())}")
    return REGISTRY[name](**params)
