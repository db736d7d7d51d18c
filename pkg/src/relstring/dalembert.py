"""Exact evolution of closed strings through their D'Alembert pair.

A gauge-normalized string is ``gamma(t, x) = (a(x + t) + b(x - t)) / 2`` with
``a``, ``b`` periodic. Evolution is evaluation: there is no time stepping, and
the same formula is used for every real ``t`` (the global weak extension).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .config import DEFAULT_TOLERANCES, ToleranceConfig
from .curves import (
    CombinedLoop,
    IntegralLoop,
    PeriodicLoop,
    SplineLoop,
    uniform_grid,
    velocity_mean,
)
from .errors import (
    NonZeroMeanVelocity,
    NotNormalized,
    NotZeroVelocity,
    RootNotBracketed,
    WrongDimension,
)


class ConstraintMode(str, Enum):
    UNIT_SPEED = "UnitSpeed"
    SUB_UNIT = "SubUnit"


def is_sampled(loop: PeriodicLoop) -> bool:
    """Whether a loop depends on spline samples (directly or through a
    combinator)."""
    if isinstance(loop, SplineLoop):
        return True
    inner = [getattr(loop, "base", None), getattr(loop, "integrand", None)]
    inner += [lp for _, lp in getattr(loop, "terms", [])]
    return any(lp is not None and is_sampled(lp) for lp in inner)


def _speed_nodes(loop: PeriodicLoop) -> np.ndarray:
    nodes = loop.check_nodes()
    return np.linalg.norm(loop.d1(nodes), axis=-1)


@dataclass(frozen=True)
class DAlembertPair:
    """The two periodic profiles of a string plus the constraint they obey."""

    a: PeriodicLoop
    b: PeriodicLoop
    mode: ConstraintMode = ConstraintMode.UNIT_SPEED
    validate: bool = field(default=True, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "mode", ConstraintMode(self.mode))
        if self.a.dim != self.b.dim:
            raise ValueError("a and b must live in the same dimension")
        if abs(self.a.period - self.b.period) > 1e-9 * self.a.period:
            raise ValueError(
                f"a and b must share the period ({self.a.period} != {self.b.period})"
            )
        if self.validate:
            dev = self.speed_deviation()
            if self.mode is ConstraintMode.UNIT_SPEED and dev > self.speed_tolerance:
                raise ValueError(f"UnitSpeed pair has | |a'| - 1 | up to {dev:.3e}")
            if self.mode is ConstraintMode.SUB_UNIT and self.max_speed() > 1 + 1e-10:
                raise ValueError(f"SubUnit pair has |a'| up to {self.max_speed():.12g}")

    @property
    def period(self) -> float:
        return self.a.period

    @property
    def speed_tolerance(self) -> float:
        """Allowed ``| |a'| - 1 |`` for UnitSpeed: tighter for exact
        backends than for spline-backed ones."""
        if is_sampled(self.a) or is_sampled(self.b):
            return DEFAULT_TOLERANCES.sampled_gauge
        return DEFAULT_TOLERANCES.gauge

    @property
    def dim(self) -> int:
        return self.a.dim

    @property
    def zero_velocity(self) -> bool:
        """True when ``a`` and ``b`` are the same loop object."""
        return self.a is self.b

    def speed_deviation(self) -> float:
        """Max over check nodes of ``| |a'| - 1 |`` and ``| |b'| - 1 |``."""
        return float(max(np.max(np.abs(_speed_nodes(lp) - 1.0)) for lp in (self.a, self.b)))

    def max_speed(self) -> float:
        return float(max(np.max(_speed_nodes(lp)) for lp in (self.a, self.b)))

    def unit_speed_holds(self, tol: float = 1e-8) -> bool:
        return self.speed_deviation() <= tol

    def sub_unit_holds(self, tol: float = 1e-10) -> bool:
        return self.max_speed() <= 1.0 + tol

    def gamma(self, t, x):
        x = np.asarray(x, float)
        return 0.5 * (self.a(x + t) + self.b(x - t))

    def gamma_t(self, t, x):
        x = np.asarray(x, float)
        return 0.5 * (self.a.d1(x + t) - self.b.d1(x - t))

    def gamma_x(self, t, x):
        x = np.asarray(x, float)
        return 0.5 * (self.a.d1(x + t) + self.b.d1(x - t))

    def tangent_sum(self, t, x):
        """``a'(x + t) + b'(x - t)``; vanishes identically at a collapse."""
        x = np.asarray(x, float)
        return self.a.d1(x + t) + self.b.d1(x - t)


@dataclass(frozen=True)
class StringState:
    """One time slice on a uniform grid of ``[0, period)``.

    The second-derivative fields are filled when the slice comes from a pair;
    geometric diagnostics need them.
    """

    t: float
    x: np.ndarray
    gamma: np.ndarray
    gamma_t: np.ndarray
    gamma_x: np.ndarray
    period: float
    gamma_xx: np.ndarray | None = None
    gamma_tt: np.ndarray | None = None
    gamma_xt: np.ndarray | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.x)

    @property
    def dim(self) -> int:
        return self.gamma.shape[1]

    @property
    def h(self) -> float:
        return self.period / self.n_nodes

    @property
    def has_second_derivatives(self) -> bool:
        return self.gamma_xx is not None and self.gamma_tt is not None and self.gamma_xt is not None

    def fd_consistency(self) -> float:
        """Max gap between ``gamma_x`` and the periodic central difference of
        ``gamma`` (an O(h^2) sanity check)."""
        fd = (np.roll(self.gamma, -1, axis=0) - np.roll(self.gamma, 1, axis=0)) / (2 * self.h)
        return float(np.max(np.linalg.norm(fd - self.gamma_x, axis=1)))


def decompose(
    curve: PeriodicLoop,
    velocity: PeriodicLoop | None = None,
    tol: ToleranceConfig = DEFAULT_TOLERANCES,
) -> DAlembertPair:
    """Split gauge-normalized initial data into its D'Alembert pair.

    ``a = gamma_0 + V`` and ``b = gamma_0 - V`` where ``V`` is the
    antiderivative of the initial velocity, so that at ``t = 0``
    ``(a + b) / 2 = gamma_0`` and ``(a' - b') / 2 = v_0``.

    Raises
    ------
    NotNormalized
        If ``|gamma_0'|^2 + |v_0|^2 = 1`` fails beyond ``tol.gauge``.
    NonZeroMeanVelocity
        If ``v_0`` has nonzero mean; ``a`` and ``b`` would not be periodic.
    """
    nodes = curve.check_nodes()
    speed2 = np.sum(curve.d1(nodes) ** 2, axis=-1)
    if velocity is not None:
        if abs(velocity.period - curve.period) > 1e-9 * curve.period:
            raise ValueError("velocity and curve periods differ")
        if not is_zero_loop(velocity):
            speed2 = speed2 + np.sum(velocity(nodes) ** 2, axis=-1)
    err = float(np.max(np.abs(speed2 - 1.0)))
    if err > tol.gauge:
        raise NotNormalized(f"| |gamma'|^2 + |v|^2 - 1 | reaches {err:.3e}")
    if velocity is None or is_zero_loop(velocity):
        return DAlembertPair(curve, curve, ConstraintMode.UNIT_SPEED)
    drift = float(np.linalg.norm(velocity_mean(velocity)))
    if drift > tol.zero_mean * curve.period:
        raise NonZeroMeanVelocity(f"|int v_0| = {drift:.3e}")
    V = IntegralLoop(velocity)
    a = CombinedLoop([(1.0, curve), (1.0, V)])
    b = CombinedLoop([(1.0, curve), (-1.0, V)])
    return DAlembertPair(a, b, ConstraintMode.UNIT_SPEED)


def is_zero_loop(loop: PeriodicLoop) -> bool:
    if getattr(loop, "name", None) == "zero":
        return True
    if isinstance(loop, SplineLoop):
        return not np.any(loop.samples)
    return False


def evaluate_state(pair: DAlembertPair, t: float, n: int) -> StringState:
    """Slice of the evolution at time ``t`` on ``n`` uniform nodes.

    Any real ``t`` is allowed, including negative times and times past
    singularities.
    """
    t = float(t)
    x = uniform_grid(pair.period, n)
    p, m = x + t, x - t
    a1, b1 = pair.a.d1(p), pair.b.d1(m)
    a2, b2 = pair.a.d2(p), pair.b.d2(m)
    second = 0.5 * (a2 + b2)
    return StringState(
        t=t,
        x=x,
        gamma=0.5 * (pair.a(p) + pair.b(m)),
        gamma_t=0.5 * (a1 - b1),
        gamma_x=0.5 * (a1 + b1),
        period=pair.period,
        gamma_xx=second,
        gamma_tt=second.copy(),
        gamma_xt=0.5 * (a2 - b2),
    )


@dataclass(frozen=True)
class CollapseTimes:
    x: np.ndarray
    t_of_x: np.ndarray
    t_min: float
    t_max: float
    max_residual: float


def _turning_gap(a: PeriodicLoop, x: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Angle from ``a'(x - t)`` to ``a'(x + t)`` in [0, 2 pi), minus pi."""
    u = a.d1(x - t)
    w = a.d1(x + t)
    cross = u[:, 0] * w[:, 1] - u[:, 1] * w[:, 0]
    dot = np.sum(u * w, axis=1)
    return np.mod(np.arctan2(cross, dot), 2 * np.pi) - np.pi


def collapse_time_map(pair: DAlembertPair, n: int | None = None,
                      check_convex: bool = True) -> CollapseTimes:
    """For every node ``x`` the unique ``t(x)`` in ``(0, E/2)`` with
    ``a'(x + t) + a'(x - t) = 0``.

    Only for planar zero-velocity pairs parametrizing a uniformly convex
    curve counter-clockwise. The root is found by bisection on the turning
    angle between the two tangents, which increases from 0 to 2 pi as ``t``
    runs over ``(0, E/2)``.
    """
    if pair.dim != 2:
        raise WrongDimension("collapse_time_map is planar only")
    if pair.mode is not ConstraintMode.UNIT_SPEED:
        raise ValueError("collapse_time_map needs a UnitSpeed pair")
    if n is None:
        n = len(pair.a.check_nodes())
    x = uniform_grid(pair.period, n)
    if not pair.zero_velocity:
        gap = np.max(np.abs(pair.a.d1(x) - pair.b.d1(x)))
        if gap > 1e-12:
            raise NotZeroVelocity(f"a' and b' differ by {gap:.3e}")
    if check_convex:
        from .convexity2d import is_uniformly_convex
        from .errors import NotConvex

        flag, margin = is_uniformly_convex(evaluate_state(pair, 0.0, n))
        if not flag:
            raise NotConvex(f"initial curve has convexity margin {margin:.3e}")

    a = pair.a
    lo = np.zeros(n)
    hi = np.full(n, 0.5 * pair.period)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        negative = _turning_gap(a, x, mid) < 0
        lo = np.where(negative, mid, lo)
        hi = np.where(negative, hi, mid)
        if np.max(hi - lo) <= 4 * np.finfo(float).eps * pair.period:
            break
    t_of_x = 0.5 * (lo + hi)
    resid = np.linalg.norm(a.d1(x + t_of_x) + a.d1(x - t_of_x), axis=1)
    max_resid = float(np.max(resid))
    if max_resid > 1e-6:
        raise RootNotBracketed(f"bisection residual {max_resid:.3e}; data not convex or not C^2")
    return CollapseTimes(x, t_of_x, float(t_of_x.min()), float(t_of_x.max()), max_resid)


@dataclass(frozen=True)
class CollapseCheck:
    point: np.ndarray | None
    max_deviation: float
    max_tangent_sum: float

    @property
    def collapsed(self) -> bool:
        return self.point is not None


def detect_collapse(pair: DAlembertPair, t: float, n: int, tol: float | None = None) -> CollapseCheck:
    """Whether the slice at ``t`` is a single point, up to ``tol * E``.

    ``max_tangent_sum`` reports ``max |a'(x + t) + b'(x - t)|``, which must
    vanish at a genuine collapse.
    """
    if tol is None:
        tol = DEFAULT_TOLERANCES.collapse
    x = uniform_grid(pair.period, n)
    g = pair.gamma(t, x)
    center = g.mean(axis=0)
    dev = float(np.max(np.linalg.norm(g - center, axis=1)))
    tsum = float(np.max(np.linalg.norm(pair.tangent_sum(t, x), axis=1)))
    point = center if dev <= tol * pair.period else None
    return CollapseCheck(point, dev, tsum)


@dataclass(frozen=True)
class SingularInterval:
    start: int
    stop: int
    x_start: float
    x_end: float
    length: float


def singular_set(pair: DAlembertPair, t: float, n: int, tol: float | None = None) -> list[SingularInterval]:
    """Maximal runs of nodes where ``|gamma_x| < tol`` (wrapping at the seam).

    ``stop`` is inclusive; ``length`` is the node count times the spacing.
    """
    if tol is None:
        tol = DEFAULT_TOLERANCES.singular
    x = uniform_grid(pair.period, n)
    h = pair.period / n
    flags = np.linalg.norm(pair.gamma_x(t, x), axis=1) < tol
    if not flags.any():
        return []
    if flags.all():
        return [SingularInterval(0, n - 1, 0.0, pair.period - h, pair.period)]
    # rotate so that index 0 is regular; runs then never wrap
    shift = int(np.argmin(flags))
    rolled = np.roll(flags, -shift)
    edges = np.diff(np.concatenate([[0], rolled.astype(int), [0]]))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1) - 1
    out = []
    for s0, s1 in zip(starts, stops):
        i0 = (s0 + shift) % n
        i1 = (s1 + shift) % n
        count = s1 - s0 + 1
        out.append(SingularInterval(int(i0), int(i1), float(x[i0]), float(x[i1]), count * h))
    return sorted(out, key=lambda iv: iv.start)
