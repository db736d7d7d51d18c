"""Scalar and field diagnostics of string slices.

Covers the area Lagrangian, the Minkowski area, the conserved energy (in
parameter and image form), gauge-constraint residuals, the Euler-Lagrange
residuals, curvature / normal velocity / normal acceleration, the geometric
law ``a = (1 - |v|^2) kappa`` and the sectional-curvature identity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy.integrate import simpson

from .config import DEFAULT_TOLERANCES, ToleranceConfig
from .dalembert import DAlembertPair, StringState, evaluate_state
from .errors import NonRegularCurve, NotStrictlyAdmissible, OutsideDomain, RelStringError


def _dot(u, w):
    return np.sum(u * w, axis=-1)


def lagrangian(xi, eta, tol: float = DEFAULT_TOLERANCES.domain):
    """Area density ``sqrt(<xi, eta>^2 + |eta|^2 (1 - |xi|^2))``.

    Works on single vectors or stacks of vectors (last axis = components).

    Raises
    ------
    OutsideDomain
        If the radicand is below ``-tol`` somewhere (space-like data).
    """
    xi = np.asarray(xi, float)
    eta = np.asarray(eta, float)
    q = _dot(xi, eta) ** 2 + _dot(eta, eta) * (1.0 - _dot(xi, xi))
    if np.any(q < -tol):
        raise OutsideDomain(f"radicand reaches {np.min(q):.3e}")
    out = np.sqrt(np.maximum(q, 0.0))
    return float(out) if out.ndim == 0 else out


def area_density_integral(state: StringState) -> float:
    """``int_0^E l(gamma_t, gamma_x) dx`` on the slice (periodic trapezoid)."""
    return float(state.h * np.sum(lagrangian(state.gamma_t, state.gamma_x)))


def minkowski_area(pair: DAlembertPair, t0: float, t1: float, n: int, m: int) -> float:
    """Minkowski area of the evolution over ``[t0, t1] x [0, E]``.

    Trapezoid in the periodic direction, Simpson in time on ``m`` levels.
    """
    if t1 < t0:
        raise ValueError("need t0 <= t1")
    if t1 == t0:
        return 0.0
    if m < 3:
        raise ValueError("need at least 3 time levels")
    times = np.linspace(t0, t1, m)
    per_slice = [area_density_integral(evaluate_state(pair, t, n)) for t in times]
    return float(simpson(per_slice, x=times))


def _tangent_split(state: StringState, min_speed: float):
    speed = np.linalg.norm(state.gamma_x, axis=1)
    regular = speed >= min_speed
    safe = np.where(regular, speed, 1.0)
    tau = state.gamma_x / safe[:, None]
    along = _dot(state.gamma_t, tau)
    v = state.gamma_t - along[:, None] * tau
    return speed, regular, tau, along, v


def conserved_energy(state: StringState, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> float:
    """``int |gamma_x|^2 / l dx = int |gamma_x| / sqrt(1 - |gamma_t^perp|^2) dx``.

    Nodes with ``|gamma_x| < tol.degenerate`` contribute 0; there the
    integrand is a 0/0 limit (e.g. light-like collapsing segments).
    """
    speed, regular, _, _, v = _tangent_split(state, tol.degenerate)
    v2 = _dot(v, v)
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(regular, speed / np.sqrt(1.0 - v2), 0.0)
    return float(state.h * np.sum(integrand))


def _segments_cross(p: np.ndarray) -> bool:
    """Whether a closed planar polyline has two non-adjacent crossing edges."""
    q = np.roll(p, -1, axis=0)
    n = len(p)

    def orient(a, b, c):
        return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])

    for i in range(n):
        j = np.arange(i + 2, n)
        if i == 0:
            j = j[j != n - 1]
        if len(j) == 0:
            continue
        o1 = orient(p[i], q[i], p[j])
        o2 = orient(p[i], q[i], q[j])
        o3 = orient(p[j], q[j], p[i][None, :])
        o4 = orient(p[j], q[j], q[i][None, :])
        if np.any((o1 * o2 < 0) & (o3 * o4 < 0)):
            return True
    return False


def image_energy(state: StringState, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> float:
    """Energy written on the image: polygonal length weighted by the Lorentz
    factor ``1 / sqrt(1 - |v|^2)`` (segment midpoint average).

    Multiplicity is taken as 1; for planar slices a warning is emitted when
    the polygon self-intersects.
    """
    speed, regular, _, _, v = _tangent_split(state, tol.degenerate)
    with np.errstate(divide="ignore", invalid="ignore"):
        lorentz = np.where(regular, 1.0 / np.sqrt(1.0 - _dot(v, v)), 0.0)
    seg = np.linalg.norm(np.roll(state.gamma, -1, axis=0) - state.gamma, axis=1)
    weight = 0.5 * (lorentz + np.roll(lorentz, -1))
    if state.dim == 2 and _segments_cross(state.gamma):
        warnings.warn("slice self-intersects; multiplicity assumed to be 1", RuntimeWarning)
    return float(np.sum(seg * weight))


def constraint_residuals(state: StringState) -> tuple[float, float]:
    """``(max |<gamma_t, gamma_x>|, max | |gamma_t|^2 + |gamma_x|^2 - 1 |)``."""
    ortho = np.abs(_dot(state.gamma_t, state.gamma_x))
    norm = np.abs(_dot(state.gamma_t, state.gamma_t) + _dot(state.gamma_x, state.gamma_x) - 1.0)
    return float(np.max(ortho)), float(np.max(norm))


@dataclass(frozen=True)
class GeometryFields:
    """Per-node curvature vector, normal velocity and normal acceleration."""

    kappa: np.ndarray
    v: np.ndarray
    acc: np.ndarray
    tangent: np.ndarray

    def max_tangential_component(self) -> float:
        comps = [np.abs(_dot(f, self.tangent)) for f in (self.kappa, self.v, self.acc)]
        return float(max(np.max(c) for c in comps))


def geometry(state: StringState, min_speed: float = 1e-10) -> GeometryFields:
    """Curvature vector, normal velocity and normal acceleration.

    ``kappa = gamma_xx^perp / |gamma_x|^2``, ``v = gamma_t^perp`` and

        a = gamma_tt^perp - 2 <gamma_t, tau> gamma_xt^perp / |gamma_x|
            + <gamma_t, tau>^2 gamma_xx^perp / |gamma_x|^2,

    which is the normal part of ``v_t - <gamma_t, tau> v_x / |gamma_x|`` and
    reduces to ``gamma_tt^perp`` in orthogonal gauge.
    """
    if not state.has_second_derivatives:
        raise ValueError("geometry needs a slice with second derivatives")
    speed = np.linalg.norm(state.gamma_x, axis=1)
    if np.min(speed) < min_speed:
        raise NonRegularCurve(f"min |gamma_x| = {np.min(speed):.3e}")
    tau = state.gamma_x / speed[:, None]

    def perp(w):
        return w - _dot(w, tau)[:, None] * tau

    along = _dot(state.gamma_t, tau)[:, None]
    s = speed[:, None]
    kappa = perp(state.gamma_xx) / s**2
    v = perp(state.gamma_t)
    acc = perp(state.gamma_tt) - 2 * along * perp(state.gamma_xt) / s + along**2 * kappa
    return GeometryFields(kappa, v, acc, tau)


def geometric_residual(state: StringState) -> float:
    """``max | a - (1 - |v|^2) kappa |`` over nodes."""
    g = geometry(state)
    rhs = (1.0 - _dot(g.v, g.v))[:, None] * g.kappa
    return float(np.max(np.linalg.norm(g.acc - rhs, axis=1)))


def _composites(state: StringState):
    ell = lagrangian(state.gamma_t, state.gamma_x)
    if np.any(ell <= 0):
        raise NotStrictlyAdmissible("area density vanishes at some node")
    q1 = _dot(state.gamma_x, state.gamma_x) / ell
    q2 = _dot(state.gamma_t, state.gamma_x) / ell
    q3 = (_dot(state.gamma_t, state.gamma_t) - 1.0) / ell
    return ell, q1, q2, q3


def el_residual(pair: DAlembertPair, t: float, n: int) -> tuple[float, float]:
    """Pointwise Euler-Lagrange residuals of the area functional at time ``t``.

    Returns the max nodewise residual of the scalar conservation equation
    ``-(|g_x|^2/l)_t + (<g_t, g_x>/l)_x`` and of the vector equation.
    Derivatives of composite quantities use central differences with
    ``dt = E/(4n)`` and ``h = E/n``; derivatives of ``gamma`` itself come
    from the pair.
    """
    h = pair.period / n
    dt = h / 4.0
    state = evaluate_state(pair, t, n)
    speed = np.linalg.norm(state.gamma_x, axis=1)
    if np.min(speed) < 1e-10:
        raise NonRegularCurve(f"min |gamma_x| = {np.min(speed):.3e}")
    _, _, _, _, v = _tangent_split(state, 1e-10)
    if np.max(_dot(v, v)) >= 1.0:
        raise NotStrictlyAdmissible("normal velocity reaches 1")
    ell, q1, q2, q3 = _composites(state)
    _, q1p, q2p, _ = _composites(evaluate_state(pair, t + dt, n))
    _, q1m, q2m, _ = _composites(evaluate_state(pair, t - dt, n))

    def ddx(q):
        return (np.roll(q, -1) - np.roll(q, 1)) / (2 * h)

    scalar = -(q1p - q1m) / (2 * dt) + ddx(q2)
    gx, gt = state.gamma_x, state.gamma_t
    principal = (
        _dot(gx, gx)[:, None] * state.gamma_tt
        + (_dot(gt, gt) - 1.0)[:, None] * state.gamma_xx
        - 2 * _dot(gt, gx)[:, None] * state.gamma_xt
    ) / ell[:, None]
    bracket = ddx(q3) - (q2p - q2m) / (2 * dt)
    vector = principal + bracket[:, None] * gx
    return float(np.max(np.abs(scalar))), float(np.max(np.linalg.norm(vector, axis=1)))


def phi_sectional_check(state: StringState) -> tuple[np.ndarray, float]:
    """``phi = |g_x| / sqrt(1 - |g_t|^2)`` and the max residual of

        -a + (1 - |v|^2) kappa = (1 - phi^2)/(1 + phi^2) (a + (1 - |v|^2) kappa).
    """
    vt2 = _dot(state.gamma_t, state.gamma_t)
    if np.max(vt2) >= 1.0:
        raise NotStrictlyAdmissible(f"max |gamma_t| = {math.sqrt(np.max(vt2)):.12g}")
    phi = np.linalg.norm(state.gamma_x, axis=1) / np.sqrt(1.0 - vt2)
    g = geometry(state)
    p = (1.0 - _dot(g.v, g.v))[:, None] * g.kappa
    factor = ((1 - phi**2) / (1 + phi**2))[:, None]
    resid = np.linalg.norm(-g.acc + p - factor * (g.acc + p), axis=1)
    return phi, float(np.max(resid))


@dataclass(frozen=True)
class DiagnosticsReport:
    t: float
    conserved_energy: float
    area_density_integral: float
    max_orthogonality_residual: float
    max_unitnorm_residual: float
    max_el_residual: float
    max_geometric_residual: float
    min_speed: float
    max_normal_velocity: float
    convex: float = math.nan

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list[float]:
        return [getattr(self, c) for c in self.columns()]

    def as_dict(self) -> dict:
        return asdict(self)


def diagnose(pair: DAlembertPair, t: float, n: int, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> DiagnosticsReport:
    """All slice diagnostics at time ``t``.

    Residuals whose preconditions fail on this slice (singular or light-like
    nodes) are reported as NaN rather than raised.
    """
    state = evaluate_state(pair, t, n)
    ortho, norm = constraint_residuals(state)
    speed, _, _, _, v = _tangent_split(state, tol.degenerate)
    try:
        el = max(el_residual(pair, t, n))
    except RelStringError:
        el = math.nan
    try:
        geo = geometric_residual(state)
    except RelStringError:
        geo = math.nan
    try:
        area = area_density_integral(state)
    except RelStringError:
        area = math.nan
    convex = math.nan
    if state.dim == 2:
        from .convexity2d import is_uniformly_convex

        try:
            convex = 1.0 if is_uniformly_convex(state)[0] else 0.0
        except RelStringError:
            convex = 0.0
    return DiagnosticsReport(
        t=float(t),
        conserved_energy=conserved_energy(state, tol),
        area_density_integral=area,
        max_orthogonality_residual=ortho,
        max_unitnorm_residual=norm,
        max_el_residual=el,
        max_geometric_residual=geo,
        min_speed=float(np.min(speed)),
        max_normal_velocity=float(np.max(np.linalg.norm(v, axis=1))),
        convex=convex,
    )
