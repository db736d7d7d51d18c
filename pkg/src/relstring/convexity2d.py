"""Planar convex strings: convexity test, inclusion of enclosed bodies and the
shape of the slice just before it collapses to a point."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dalembert import DAlembertPair, StringState, detect_collapse, evaluate_state
from .config import DEFAULT_TOLERANCES
from .errors import NoCollapseAtTbar, NonRegularCurve, NotConvex, WrongDimension


def _rotate(w: np.ndarray) -> np.ndarray:
    return np.stack([-w[..., 1], w[..., 0]], axis=-1)


def is_uniformly_convex(state: StringState, min_speed: float = 1e-10) -> tuple[bool, float]:
    """``(min <gamma_xx, nu> > 0, min <gamma_xx, nu>)`` with ``nu`` the
    inward normal ``R gamma_x / |gamma_x|`` (``R`` = rotation by pi/2)."""
    if state.dim != 2:
        raise WrongDimension("convexity is tested for planar slices only")
    if not state.has_second_derivatives:
        raise ValueError("state has no second derivatives")
    speed = np.linalg.norm(state.gamma_x, axis=1)
    if np.min(speed) < min_speed:
        raise NonRegularCurve(f"min |gamma_x| = {np.min(speed):.3e}")
    nu = _rotate(state.gamma_x) / speed[:, None]
    margin = float(np.min(np.sum(state.gamma_xx * nu, axis=1)))
    return margin > 0.0, margin


def signed_area(points: np.ndarray) -> float:
    """Shoelace area, positive for counter-clockwise order."""
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@dataclass(frozen=True)
class ConvexSlice:
    """Polygon through the nodes of a planar slice, counter-clockwise."""

    nodes: np.ndarray
    convexity_margin: float
    period: float

    @classmethod
    def from_state(cls, state: StringState) -> "ConvexSlice":
        if state.dim != 2:
            raise WrongDimension("ConvexSlice is planar")
        try:
            _, margin = is_uniformly_convex(state)
        except (NonRegularCurve, ValueError):
            margin = float("nan")
        nodes = np.array(state.gamma, float)
        if signed_area(nodes) < 0:
            nodes = nodes[::-1].copy()
        return cls(nodes, margin, state.period)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def polygon_is_convex(self, rel_tol: float = 1e-12) -> bool:
        """No right turns between consecutive non-degenerate edges."""
        edges = np.roll(self.nodes, -1, axis=0) - self.nodes
        lengths = np.linalg.norm(edges, axis=1)
        edges = edges[lengths > rel_tol * self.period]
        if len(edges) < 3:
            return True
        nxt = np.roll(edges, -1, axis=0)
        cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
        scale = np.linalg.norm(edges, axis=1) * np.linalg.norm(nxt, axis=1)
        if np.any(cross < -1e-9 * scale):
            return False
        # total turning of a simple convex polygon is exactly one revolution
        turning = np.arctan2(cross, np.sum(edges * nxt, axis=1)).sum()
        return abs(turning - 2 * np.pi) < 1e-6


def inclusion_check(inner: ConvexSlice, outer: ConvexSlice, slack: float | None = None) -> bool:
    """Whether every node of ``inner`` lies in the polygon of ``outer``,
    allowing a boundary slack of ``1e-10 * E`` by default."""
    for s in (inner, outer):
        if not s.polygon_is_convex():
            raise NotConvex("inclusion_check needs convex slices")
    if slack is None:
        slack = DEFAULT_TOLERANCES.inclusion * outer.period
    v = outer.nodes
    edges = np.roll(v, -1, axis=0) - v
    lengths = np.linalg.norm(edges, axis=1)
    keep = lengths > 0
    v, edges, lengths = v[keep], edges[keep], lengths[keep]
    rel = inner.nodes[:, None, :] - v[None, :, :]
    cross = edges[None, :, 0] * rel[..., 1] - edges[None, :, 1] * rel[..., 0]
    return bool(np.all(cross / lengths[None, :] >= -slack))


@dataclass(frozen=True)
class ProfileSample:
    t: float
    delta: float
    max_ratio: float
    min_ratio: float

    @property
    def spread(self) -> float:
        return self.max_ratio / self.min_ratio - 1.0

    @property
    def deviation(self) -> float:
        return max(self.max_ratio - 1.0, 1.0 - self.min_ratio)


def collapse_profile(
    pair: DAlembertPair,
    t_bar: float,
    p,
    times: Sequence[float],
    n: int = 1024,
    tol: float | None = None,
) -> list[ProfileSample]:
    """Nodal max and min of ``|gamma(t, x) - p| / (t_bar - t)`` for each time.

    A circular collapse has both ratios tending to 1 as ``t -> t_bar``.
    """
    if tol is None:
        tol = DEFAULT_TOLERANCES.collapse
    p = np.asarray(p, float)
    check = detect_collapse(pair, t_bar, n, tol)
    if not check.collapsed:
        raise NoCollapseAtTbar(f"slice at t={t_bar:g} has radius {check.max_deviation:.3e}")
    if np.linalg.norm(check.point - p) > tol * pair.period:
        raise NoCollapseAtTbar(f"collapse point {check.point} differs from {p}")
    out = []
    for t in times:
        delta = t_bar - t
        if delta <= 0:
            raise ValueError("profile times must precede t_bar")
        g = evaluate_state(pair, t, n).gamma
        ratio = np.linalg.norm(g - p, axis=1) / delta
        out.append(ProfileSample(float(t), float(delta), float(ratio.max()), float(ratio.min())))
    return out
