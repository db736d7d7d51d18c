"""Unit-speed approximation of sub-unit-speed polygons.

A polyline with slopes ``|c| <= 1`` is densified into a zig-zag with slopes
``c +- d`` (``<c, d> = 0``, ``|c|^2 + |d|^2 = 1``), and every corner of the
zig-zag is then replaced by a C^2 unit-speed arc that agrees with the
polyline outside a small window and has the same length inside it. Pairs
built this way are genuine string solutions converging uniformly to the
(non-critical) limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .curves import PeriodicLoop, PiecewiseLinearLoop, SplineLoop, _vectorized, uniform_grid
from .dalembert import ConstraintMode, DAlembertPair
from .errors import BadParams, OddK, ParamsInfeasible

_GLX, _GLW = np.polynomial.legendre.leggauss(64)
_GLX32, _GLW32 = np.polynomial.legendre.leggauss(32)
# the cap speed sqrt(tau1^2 + Y'^2) is nearly singular at u = 0 for sharp
# corners (small tau1), hence the many cap panels
_CAP_PANELS = 64
_BUMP_PANELS = 16


def normal_field(c) -> np.ndarray:
    """A vector ``d`` with ``<d, c> = 0`` and ``|d|^2 = 1 - |c|^2``.

    In the plane ``d`` is ``c`` rotated counter-clockwise by pi/2 and
    rescaled; in higher dimension it is the first standard basis vector with
    a non-negligible component orthogonal to ``c``.
    """
    c = np.asarray(c, float)
    norm_c = float(np.linalg.norm(c))
    size = math.sqrt(max(1.0 - norm_c**2, 0.0))
    if size == 0.0:
        return np.zeros_like(c)
    if len(c) == 2 and norm_c > 0:
        return size * np.array([-c[1], c[0]]) / norm_c
    c_hat = c / norm_c if norm_c > 0 else np.zeros_like(c)
    for i in range(len(c)):
        e = np.zeros_like(c)
        e[i] = 1.0
        u = e - np.dot(e, c_hat) * c_hat
        nu = np.linalg.norm(u)
        if nu > 1e-8:
            return size * u / nu
    raise BadParams("no direction orthogonal to c")


def zigzag(a: PiecewiseLinearLoop, k: int) -> PiecewiseLinearLoop:
    """Split every segment into ``k`` equal parts with alternating slopes
    ``c + d`` and ``c - d``.

    The offset from ``a`` is a triangle wave of height ``|d| L_i / k`` on a
    segment of length ``L_i``, so the result is continuous, closes up
    (``k`` even) and stays within ``E / k`` of ``a``.
    """
    if k < 2 or k % 2:
        raise OddK(f"k must be even and >= 2, got {k}")
    speeds = np.linalg.norm(a.slopes, axis=1)
    if np.max(speeds) > 1.0 + 1e-12:
        raise BadParams(f"slopes must satisfy |c| <= 1, max is {np.max(speeds):.15g}")
    bps = [0.0]
    slopes = []
    for i, c in enumerate(a.slopes):
        lo, hi = a.breakpoints[i], a.breakpoints[i + 1]
        d = normal_field(c)
        for j in range(k):
            bps.append(lo + (j + 1) * (hi - lo) / k)
            slopes.append(c + d if j % 2 == 0 else c - d)
        bps[-1] = hi
    return PiecewiseLinearLoop(np.array(bps), np.array(slopes), origin=a.origin)


def sup_distance_polylines(p: PiecewiseLinearLoop, q: PiecewiseLinearLoop) -> float:
    """Exact ``max_x |p(x) - q(x)|`` for two polylines on one period; the
    difference is piecewise linear, so its maximum sits at a breakpoint."""
    pts = np.union1d(p.breakpoints[:-1], q.breakpoints[:-1])
    mids = 0.5 * (pts + np.append(pts[1:], p.period))
    s = np.concatenate([pts, mids])
    return float(np.max(np.linalg.norm(p(s) - q(s), axis=1)))


@dataclass(frozen=True)
class SmoothingParams:
    """Zig-zag density ``k``, corner window width ``ell`` (the curve changes
    only on ``|s| < ell/2`` around each corner) and sup-norm budget ``eta``."""

    k: int
    ell: float
    eta: float

    def __post_init__(self):
        if self.k < 2 or self.k % 2:
            raise OddK(f"k must be even and >= 2, got {self.k}")
        if not self.ell > 0:
            raise BadParams("ell must be positive")
        if not 0 < self.eta < self.ell / 3:
            raise BadParams("eta must lie in (0, ell/3)")

    def check_against(self, a: PiecewiseLinearLoop) -> None:
        bound = float(np.min(a.segment_lengths)) / (3 * self.k)
        if self.ell >= bound:
            raise BadParams(f"ell = {self.ell:g} must be below min segment / (3k) = {bound:g}")

    @classmethod
    def auto(cls, k: int, *loops: PiecewiseLinearLoop, eta: float | None = None) -> "SmoothingParams":
        ell = 0.9 * min(float(np.min(lp.segment_lengths)) for lp in loops) / (3 * k)
        if eta is None:
            eta = 0.9 * ell / 3
        return cls(k, ell, eta)


def _gl_integral(f, lo, hi, panels: int = 1):
    """Vectorized composite 64-point Gauss-Legendre integral of ``f`` over
    ``[lo, hi]`` with ``panels`` equal panels."""
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    width = (hi - lo) / panels
    total = 0.0
    for k in range(panels):
        a = lo + k * width
        half = 0.5 * width
        pts = (a + half)[..., None] + half[..., None] * _GLX
        total = total + half * (f(pts) @ _GLW)
    return total


class _CumulativeIntegral:
    """``x -> int_lo^x f`` from a table over equal panels plus a 32-point
    rule on the last partial panel."""

    def __init__(self, f, lo: float, hi: float, panels: int):
        self.f = f
        self.lo = lo
        self.width = (hi - lo) / panels
        self.panels = panels
        edges = lo + self.width * np.arange(panels + 1)
        parts = _gl_integral(f, edges[:-1], edges[1:])
        self.table = np.concatenate([[0.0], np.cumsum(parts)])
        self.edges = edges

    @property
    def total(self) -> float:
        return float(self.table[-1])

    def __call__(self, x):
        x = np.asarray(x, float)
        k = np.clip(np.floor((x - self.lo) / self.width).astype(int), 0, self.panels - 1)
        a = self.edges[k]
        half = 0.5 * (x - a)
        pts = (a + half)[..., None] + half[..., None] * _GLX32
        return self.table[k] + half * (self.f(pts) @ _GLW32)


@dataclass(frozen=True)
class CornerSmoothing:
    """Smoothing of one corner ``vertex + s tau1 e1 + |s| tau2 e2``.

    On ``|sigma| <= alpha`` the corner is replaced by a quartic cap; on
    ``[ell/3, ell/2]`` a small bump of height ``beta p(sigma)`` with
    ``p = (sigma - ell/3)^3 (ell/2 - sigma)^3`` adds back the length the cap
    removes. The curve is then run at unit speed in the arc-length ``s``.
    """

    vertex: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    tau1: float
    tau2: float
    ell: float
    eta: float
    alpha: float
    beta: float

    # local parameter sigma -------------------------------------------------
    def _p(self, s):
        return (s - self.ell / 3) ** 3 * (self.ell / 2 - s) ** 3

    def _dp(self, s):
        u, w = s - self.ell / 3, self.ell / 2 - s
        return 3 * u**2 * w**3 - 3 * u**3 * w**2

    def _ddp(self, s):
        u, w = s - self.ell / 3, self.ell / 2 - s
        return 6 * u * w**3 - 18 * u**2 * w**2 + 6 * u**3 * w

    def _cap_slope(self, u):
        """``dY/dsigma`` of the cap at ``sigma = alpha u``."""
        return self.tau2 * (1.5 * u - 0.5 * u**3)

    def _cap_speed(self, u):
        return np.sqrt(self.tau1**2 + self._cap_slope(u) ** 2)

    def _bump_speed(self, s):
        return np.sqrt(1.0 + (self.beta * self._dp(s)) ** 2)

    @cached_property
    def _cap_integral(self) -> _CumulativeIntegral:
        return _CumulativeIntegral(self._cap_speed, -1.0, 1.0, _CAP_PANELS)

    @cached_property
    def _bump_integral(self) -> _CumulativeIntegral:
        return _CumulativeIntegral(self._bump_speed, self.ell / 3, self.ell / 2, _BUMP_PANELS)

    @cached_property
    def cap_deficit(self) -> float:
        """Length lost by the cap: ``2 alpha - int_{-alpha}^{alpha} |gamma'|``."""
        return self.alpha * (2.0 - self._cap_integral.total)

    @cached_property
    def _inverse_guess(self) -> PchipInterpolator:
        # monotone interpolant of sigma(s), a starting point for Newton
        sigma = np.linspace(-self.alpha, self.ell / 2, 257)
        return PchipInterpolator(self.arclength(sigma), sigma)

    def local(self, sigma, order: int = 0) -> np.ndarray:
        """Local planar coordinates (or their ``order``-th sigma-derivative)."""
        s = np.atleast_1d(np.asarray(sigma, float))
        t1, t2, al = self.tau1, self.tau2, self.alpha
        out = np.zeros((len(s), 2))
        cap = np.abs(s) <= al
        bump = (s >= self.ell / 3) & (s <= self.ell / 2)
        line = ~(cap | bump)
        sg = np.sign(s)
        if order == 0:
            out[:, 0] = t1 * s
            out[:, 1] = t2 * np.abs(s)
            c = s[cap]
            out[cap, 1] = t2 * (-(c**4) / (8 * al**3) + 3 * c**2 / (4 * al) + 3 * al / 8)
            b = s[bump]
            out[bump] = b[:, None] * np.array([t1, t2]) + (self.beta * self._p(b))[:, None] * np.array([-t2, t1])
        elif order == 1:
            out[line, 0] = t1
            out[line, 1] = t2 * sg[line]
            out[cap, 0] = t1
            out[cap, 1] = self._cap_slope(s[cap] / al)
            b = s[bump]
            out[bump] = np.array([t1, t2]) + (self.beta * self._dp(b))[:, None] * np.array([-t2, t1])
        elif order == 2:
            c = s[cap]
            out[cap, 1] = t2 * (-1.5 * c**2 / al**3 + 1.5 / al)
            b = s[bump]
            out[bump] = (self.beta * self._ddp(b))[:, None] * np.array([-t2, t1])
        else:
            raise ValueError("order must be 0, 1 or 2")
        return out

    def arclength(self, sigma) -> np.ndarray:
        """Arc-length ``s(sigma)``, normalized so that ``s = sigma`` for
        ``sigma <= -alpha``."""
        s = np.atleast_1d(np.asarray(sigma, float))
        al, dfc = self.alpha, self.cap_deficit
        out = s.copy()
        cap = np.abs(s) <= al
        out[cap] = -al + al * self._cap_integral(s[cap] / al)
        mid = (s > al) & (s < self.ell / 3)
        out[mid] = s[mid] - dfc
        bump = s >= self.ell / 3
        b = np.minimum(s[bump], self.ell / 2)
        out[bump] = self.ell / 3 - dfc + self._bump_integral(b) + (s[bump] - b)
        return out

    def _speed_sigma(self, s):
        return np.linalg.norm(self.local(s, 1), axis=1)

    def sigma_of(self, s) -> np.ndarray:
        """Invert :meth:`arclength` by safeguarded Newton."""
        s = np.atleast_1d(np.asarray(s, float))
        sigma = s.copy()
        active = (s > -self.alpha) & (s < self.ell / 2)
        if not np.any(active):
            return sigma
        target = s[active]
        # s(-alpha) = -alpha and s(ell/2) = ell/2 bracket every root
        lo = np.full_like(target, -self.alpha)
        hi = np.full_like(target, self.ell / 2)
        x = np.clip(self._inverse_guess(target), lo, hi)
        for _ in range(60):
            f = self.arclength(x) - target
            lo = np.where(f < 0, x, lo)
            hi = np.where(f > 0, x, hi)
            step = f / self._speed_sigma(x)
            x_new = x - step
            outside = (x_new < lo) | (x_new > hi)
            x_new = np.where(outside, 0.5 * (lo + hi), x_new)
            converged = np.max(np.abs(x_new - x)) < 1e-13 * self.ell
            x = x_new
            if converged:
                break
        sigma[active] = x
        return sigma

    # unit-speed curve in the arc-length s ----------------------------------
    def _embed(self, local: np.ndarray) -> np.ndarray:
        return local[:, :1] * self.e1 + local[:, 1:] * self.e2

    def position(self, s) -> np.ndarray:
        return self.vertex + self._embed(self.local(self.sigma_of(s), 0))

    def tangent(self, s) -> np.ndarray:
        d1 = self.local(self.sigma_of(s), 1)
        return self._embed(d1 / np.linalg.norm(d1, axis=1, keepdims=True))

    def _d2_local(self, sigma) -> np.ndarray:
        d1 = self.local(sigma, 1)
        d2 = self.local(sigma, 2)
        sp2 = np.sum(d1**2, axis=1, keepdims=True)
        return (d2 - np.sum(d2 * d1, axis=1, keepdims=True) * d1 / sp2) / sp2

    def second(self, s) -> np.ndarray:
        return self._embed(self._d2_local(self.sigma_of(s)))

    def wedge(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, float))
        return self.vertex + s[:, None] * self.tau1 * self.e1 + np.abs(s)[:, None] * self.tau2 * self.e2

    # checks -----------------------------------------------------------------
    def window_length(self) -> float:
        """``int_{-ell/2}^{ell/2} |gamma'(sigma)| d sigma``: the straight parts
        exactly, the cap and bump by composite Gauss-Legendre."""
        straight = (self.ell / 2 - self.alpha) + (self.ell / 3 - self.alpha)
        cap = self.alpha * self._cap_integral.total
        bump = self._bump_integral.total
        return straight + cap + bump

    def window_length_adaptive(self) -> float:
        """Same integral by adaptive quadrature (independent check)."""
        pts = [-self.ell / 2, -self.alpha, self.alpha, self.ell / 3, self.ell / 2]
        total = 0.0
        for lo, hi in zip(pts[:-1], pts[1:]):
            val, _ = quad(lambda x: float(self._speed_sigma(x)[0]), lo, hi, epsabs=1e-13, epsrel=1e-13, limit=400)
            total += val
        return total

    def sup_distance(self, samples: int = 1201) -> float:
        s = np.linspace(-self.ell / 2, self.ell / 2, samples)
        s = np.union1d(s, [-self.alpha, 0.0, self.alpha, self.ell / 3, 5 * self.ell / 12])
        return float(np.max(np.linalg.norm(self.position(s) - self.wedge(s), axis=1)))

    def junction_jump(self) -> float:
        """Largest jump of the second derivative (in ``s``) across the
        junctions of the piecewise definition."""
        eps = 1e-12 * self.ell
        jumps = []
        for j in (-self.ell / 2, -self.alpha, self.alpha, self.ell / 3, self.ell / 2):
            left = self._d2_local(np.array([j - eps]))
            right = self._d2_local(np.array([j + eps]))
            jumps.append(float(np.linalg.norm(left - right)))
        return max(jumps)


def _frame(u_in, u_out):
    plus = u_in + u_out
    minus = u_out - u_in
    tau1 = 0.5 * float(np.linalg.norm(plus))
    tau2 = 0.5 * float(np.linalg.norm(minus))
    return plus, minus, tau1, tau2


def _bump_excess(ell: float, amplitude: float) -> float:
    """``int_{ell/3}^{ell/2} sqrt(1 + (A p'/max|p|)^2) - ell/6``."""
    pmax = (ell / 12) ** 6
    beta = amplitude / pmax

    def dp(s):
        u, w = s - ell / 3, ell / 2 - s
        return 3 * u**2 * w**3 - 3 * u**3 * w**2

    val = _gl_integral(lambda s: np.sqrt(1.0 + (beta * dp(s)) ** 2), ell / 3, ell / 2, _BUMP_PANELS)
    return float(val) - ell / 6


def smooth_corner(u_in, u_out, ell: float, eta: float, vertex=None) -> CornerSmoothing | None:
    """Smoothing of the corner where unit slope ``u_in`` turns into ``u_out``.

    Returns ``None`` for collinear slopes (nothing to smooth). The cap width
    starts at ``eta/2`` and is shrunk until the measured distance to the
    corner is within ``eta``; the bump amplitude solves the length balance.
    """
    u_in = np.asarray(u_in, float)
    u_out = np.asarray(u_out, float)
    if not 0 < eta < ell / 3:
        raise BadParams("eta must lie in (0, ell/3)")
    plus, minus, tau1, tau2 = _frame(u_in, u_out)
    if tau2 < 1e-14:
        return None
    if tau1 < 1e-12:
        raise ParamsInfeasible("reversal corner (u_out = -u_in) has no smoothing frame")
    e1, e2 = plus / (2 * tau1), minus / (2 * tau2)
    vertex = np.zeros(len(u_in)) if vertex is None else np.asarray(vertex, float)
    pmax = (ell / 12) ** 6
    alpha = eta / 2
    for _ in range(80):
        proto = CornerSmoothing(vertex, e1, e2, tau1, tau2, ell, eta, alpha, 0.0)
        target = proto.cap_deficit
        hi = ell / 6
        while _bump_excess(ell, hi) < target:
            hi *= 2
            if hi > 1e6 * ell:
                raise ParamsInfeasible("bump amplitude does not bracket the cap deficit")
        amp = brentq(lambda A: _bump_excess(ell, A) - target, 0.0, hi, xtol=1e-18, rtol=1e-15, maxiter=200)
        corner = CornerSmoothing(vertex, e1, e2, tau1, tau2, ell, eta, alpha, amp / pmax)
        if amp <= eta / 2 and corner.sup_distance() <= eta:
            return corner
        alpha *= 0.8
    raise ParamsInfeasible(f"no admissible cap width for ell={ell:g}, eta={eta:g}")


class CornerSmoothedLoop(PeriodicLoop):
    """Unit-speed C^2 loop equal to a unit-slope polyline away from corners."""

    def __init__(self, base: PiecewiseLinearLoop, corners: list[tuple[float, CornerSmoothing]], ell: float):
        self.base = base
        self.period = base.period
        self.dim = base.dim
        self.ell = ell
        corners = sorted(corners, key=lambda c: c[0])
        self.corner_x = np.array([c[0] for c in corners])
        self.corners = [c[1] for c in corners]

    def _locate(self, s):
        r = np.mod(s, self.period)
        if len(self.corners) == 0:
            return r, np.full(len(r), -1), np.zeros(len(r))
        m = len(self.corner_x)
        right = np.searchsorted(self.corner_x, r) % m
        best = np.full(len(r), -1)
        off = np.zeros(len(r))
        for cand in (right, (right - 1) % m):
            d = np.mod(r - self.corner_x[cand] + 0.5 * self.period, self.period) - 0.5 * self.period
            hit = np.abs(d) < 0.5 * self.ell
            best = np.where(hit, cand, best)
            off = np.where(hit, d, off)
        return r, best, off

    def _dispatch(self, s, base_fn, corner_fn):
        r, idx, off = self._locate(s)
        out = base_fn(r)
        for c in np.unique(idx[idx >= 0]):
            sel = idx == c
            out[sel] = corner_fn(self.corners[c], off[sel])
        return out

    @_vectorized
    def _eval(self, s):
        return self._dispatch(s, self.base, lambda c, o: c.position(o))

    @_vectorized
    def _d1(self, s):
        return self._dispatch(s, self.base.d1, lambda c, o: c.tangent(o))

    @_vectorized
    def _d2(self, s):
        return self._dispatch(s, self.base.d2, lambda c, o: c.second(o))

    def panels(self):
        edges = [self.base.breakpoints]
        for xc in self.corner_x:
            edges.append(np.mod(xc + np.array([-0.5, 0.5]) * self.ell, self.period))
        e = np.union1d(np.concatenate(edges), [0.0, self.period])
        fine = np.linspace(0.0, self.period, 513)
        return np.union1d(e, fine)

    def length_defect(self) -> float:
        """``sum_corners (window length - ell)``: the change of total length."""
        return float(sum(c.window_length() - self.ell for c in self.corners))

    def to_spline(self, n: int) -> SplineLoop:
        grid = uniform_grid(self.period, n)
        return SplineLoop(self(grid), self.period)

    def __repr__(self):
        return f"CornerSmoothedLoop(corners={len(self.corners)}, ell={self.ell:g}, period={self.period:g})"


def smooth_corners(z: PiecewiseLinearLoop, params: SmoothingParams) -> CornerSmoothedLoop:
    """Replace every corner of a unit-slope polyline by a C^2 unit-speed arc."""
    speeds = np.linalg.norm(z.slopes, axis=1)
    if np.max(np.abs(speeds - 1.0)) > 1e-12:
        raise BadParams("smooth_corners needs unit slopes")
    params.check_against(z)
    corners = []
    n_seg = len(z.slopes)
    for i in range(n_seg):
        u_in, u_out = z.slopes[i - 1], z.slopes[i]
        corner = smooth_corner(u_in, u_out, params.ell, params.eta, vertex=z.vertices[i])
        if corner is not None:
            corners.append((float(z.breakpoints[i]), corner))
    loop = CornerSmoothedLoop(z, corners, params.ell)
    defect = abs(loop.length_defect())
    if defect > 1e-8:
        raise ParamsInfeasible(f"smoothed loop changes the length by {defect:.3e}")
    return loop


def approximate_string(
    a: PiecewiseLinearLoop,
    b: PiecewiseLinearLoop,
    k: int,
    params: SmoothingParams | None = None,
) -> DAlembertPair:
    """UnitSpeed C^2 pair whose evolution is within ``E/k + 2 eta`` of the
    evolution of the sub-unit-speed polyline pair ``(a, b)``."""
    if abs(a.period - b.period) > 1e-12 * a.period:
        raise BadParams("a and b need a common period")
    za, zb = zigzag(a, k), zigzag(b, k)
    if params is None:
        params = SmoothingParams.auto(k, za, zb)
    elif params.k != k:
        raise BadParams("params.k differs from k")
    return DAlembertPair(smooth_corners(za, params), smooth_corners(zb, params), ConstraintMode.UNIT_SPEED)


def evolution_sup_distance(p: DAlembertPair, q: DAlembertPair, times, n: int) -> float:
    """``max |gamma_p - gamma_q|`` over the given times and ``n`` uniform nodes."""
    x = uniform_grid(p.period, n)
    return float(max(np.max(np.linalg.norm(p.gamma(t, x) - q.gamma(t, x), axis=1)) for t in times))
