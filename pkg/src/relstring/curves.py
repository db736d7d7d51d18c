"""Closed periodic curves R -> R^n with two derivatives.

Three concrete backends are provided:

* :class:`AnalyticLoop` wraps closed-form callables.
* :class:`SplineLoop` is a periodic cubic spline through uniform samples.
* :class:`PiecewiseLinearLoop` is exact piecewise-linear data (polygons).

A few combinators (:class:`RescaledLoop`, :class:`CombinedLoop`,
:class:`IntegralLoop`) build new loops from existing ones without sampling,
so derivatives stay exact whenever the ingredients are.

All loops evaluate vectorized: a scalar parameter returns an ``(n,)`` array,
an array of shape ``(m,)`` returns ``(m, n)``.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .config import DEFAULT_TOLERANCES
from .errors import NonRegularCurve, TooFewSamples

# 8-point Gauss-Legendre rule on [-1, 1]; exact for polynomials of degree 15.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)

MIN_SPLINE_SAMPLES = 8


def _vectorized(method):
    def wrapper(self, s):
        s_arr = np.asarray(s, dtype=float)
        out = method(self, np.atleast_1d(s_arr).ravel())
        if s_arr.ndim == 0:
            return out[0]
        return out.reshape(s_arr.shape + (self.dim,))

    wrapper.__name__ = method.__name__
    wrapper.__doc__ = method.__doc__
    return wrapper


class PeriodicLoop:
    """A closed curve parametrized on [0, period) and extended periodically."""

    period: float
    dim: int

    def __call__(self, s):
        return self._eval(s)

    def d1(self, s):
        return self._d1(s)

    def d2(self, s):
        return self._d2(s)

    def check_nodes(self) -> np.ndarray:
        """Parameter values where pointwise invariants are asserted."""
        return np.linspace(0.0, self.period, 1024, endpoint=False)

    def panels(self) -> np.ndarray:
        """Panel edges for composite quadrature over one period."""
        return np.linspace(0.0, self.period, 513)

    def speed(self, s) -> np.ndarray:
        return np.linalg.norm(self.d1(s), axis=-1)

    def sample(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        grid = uniform_grid(self.period, n)
        return grid, self(grid)


def uniform_grid(period: float, n: int) -> np.ndarray:
    return np.arange(n) * (period / n)


class AnalyticLoop(PeriodicLoop):
    """Loop given by closed-form callables ``f, df, ddf`` of a 1D array.

    The callables must already be periodic; the parameter is passed through
    unreduced so closed forms stay exact.
    """

    def __init__(
        self,
        f: Callable[[np.ndarray], np.ndarray],
        df: Callable[[np.ndarray], np.ndarray],
        ddf: Callable[[np.ndarray], np.ndarray],
        period: float,
        dim: int,
        name: str = "analytic",
    ):
        if period <= 0:
            raise ValueError("period must be positive")
        self._f, self._df, self._ddf = f, df, ddf
        self.period = float(period)
        self.dim = int(dim)
        self.name = name

    @_vectorized
    def _eval(self, s):
        return np.asarray(self._f(s), dtype=float).reshape(len(s), self.dim)

    @_vectorized
    def _d1(self, s):
        return np.asarray(self._df(s), dtype=float).reshape(len(s), self.dim)

    @_vectorized
    def _d2(self, s):
        return np.asarray(self._ddf(s), dtype=float).reshape(len(s), self.dim)

    def __repr__(self):
        return f"AnalyticLoop({self.name}, period={self.period:g})"


def circle_loop(radius: float = 1.0, center=(0.0, 0.0)) -> AnalyticLoop:
    """Counter-clockwise unit-speed circle of the given radius."""
    R = float(radius)
    c = np.asarray(center, dtype=float)

    def f(s):
        return c + R * np.column_stack([np.cos(s / R), np.sin(s / R)])

    def df(s):
        return np.column_stack([-np.sin(s / R), np.cos(s / R)])

    def ddf(s):
        return -np.column_stack([np.cos(s / R), np.sin(s / R)]) / R

    return AnalyticLoop(f, df, ddf, 2 * np.pi * R, 2, name=f"circle(R={R:g})")


def zero_loop(period: float, dim: int) -> AnalyticLoop:
    def zeros(s):
        return np.zeros((len(s), dim))

    return AnalyticLoop(zeros, zeros, zeros, period, dim, name="zero")


class SplineLoop(PeriodicLoop):
    """Periodic cubic spline through ``N`` uniform samples over one period.

    Derivatives are those of the spline polynomial itself.
    """

    def __init__(self, samples, period: float):
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 2:
            raise ValueError("samples must have shape (N, n)")
        if samples.shape[0] < MIN_SPLINE_SAMPLES:
            raise TooFewSamples(
                f"need at least {MIN_SPLINE_SAMPLES} samples, got {samples.shape[0]}"
            )
        if period <= 0:
            raise ValueError("period must be positive")
        self.samples = samples
        self.period = float(period)
        self.n_samples, self.dim = samples.shape
        self.grid = uniform_grid(self.period, self.n_samples)
        knots = np.append(self.grid, self.period)
        values = np.vstack([samples, samples[:1]])
        self._spline = CubicSpline(knots, values, axis=0, bc_type="periodic")

    @property
    def h(self) -> float:
        return self.period / self.n_samples

    def _reduce(self, s):
        return np.mod(s, self.period)

    @_vectorized
    def _eval(self, s):
        return self._spline(self._reduce(s))

    @_vectorized
    def _d1(self, s):
        return self._spline(self._reduce(s), 1)

    @_vectorized
    def _d2(self, s):
        return self._spline(self._reduce(s), 2)

    def check_nodes(self):
        return self.grid

    def panels(self):
        return np.append(self.grid, self.period)

    def __repr__(self):
        return f"SplineLoop(N={self.n_samples}, period={self.period:.12g})"


class PiecewiseLinearLoop(PeriodicLoop):
    """Exact periodic polyline.

    ``breakpoints`` run from 0 to ``period``; segment ``i`` covers
    ``[breakpoints[i], breakpoints[i+1]]`` with constant velocity
    ``slopes[i]``. Derivatives are right-continuous at breakpoints and the
    second derivative is identically zero.
    """

    def __init__(self, breakpoints, slopes, origin=None, closure_tol: float = 1e-12):
        bp = np.asarray(breakpoints, dtype=float)
        c = np.atleast_2d(np.asarray(slopes, dtype=float))
        if bp.ndim != 1 or len(bp) < 2:
            raise ValueError("need at least two breakpoints")
        if bp[0] != 0.0:
            raise ValueError("first breakpoint must be 0")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if c.shape[0] != len(bp) - 1:
            raise ValueError("need one slope per segment")
        self.breakpoints = bp
        self.slopes = c
        self.period = float(bp[-1])
        self.dim = c.shape[1]
        self.origin = np.zeros(self.dim) if origin is None else np.asarray(origin, float)
        lengths = np.diff(bp)
        steps = lengths[:, None] * c
        gap = np.linalg.norm(steps.sum(axis=0))
        scale = max(1.0, float(np.abs(steps).sum()))
        if gap > closure_tol * scale:
            raise ValueError(f"polyline does not close (gap {gap:.3e})")
        self.vertices = self.origin + np.vstack([np.zeros(self.dim), np.cumsum(steps, axis=0)[:-1]])

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def _segment(self, s):
        r = np.mod(s, self.period)
        idx = np.searchsorted(self.breakpoints, r, side="right") - 1
        idx = np.clip(idx, 0, len(self.slopes) - 1)
        return r, idx

    @_vectorized
    def _eval(self, s):
        r, idx = self._segment(s)
        return self.vertices[idx] + (r - self.breakpoints[idx])[:, None] * self.slopes[idx]

    @_vectorized
    def _d1(self, s):
        _, idx = self._segment(s)
        return self.slopes[idx]

    @_vectorized
    def _d2(self, s):
        return np.zeros((len(s), self.dim))

    def check_nodes(self):
        return 0.5 * (self.breakpoints[:-1] + self.breakpoints[1:])

    def panels(self):
        return self.breakpoints

    def __repr__(self):
        return f"PiecewiseLinearLoop(segments={len(self.slopes)}, period={self.period:g})"


class RescaledLoop(PeriodicLoop):
    """``s -> scale * base(s / stretch)``, with period ``stretch * base.period``
    unless an explicit (multiple) period is given."""

    def __init__(self, base: PeriodicLoop, scale: float = 1.0, stretch: float = 1.0,
                 period: float | None = None):
        self.base = base
        self.scale = float(scale)
        self.stretch = float(stretch)
        self.period = float(period) if period is not None else base.period * self.stretch
        self.dim = base.dim

    def __call__(self, s):
        return self.scale * self.base(np.asarray(s, float) / self.stretch)

    def d1(self, s):
        return (self.scale / self.stretch) * self.base.d1(np.asarray(s, float) / self.stretch)

    def d2(self, s):
        return (self.scale / self.stretch**2) * self.base.d2(np.asarray(s, float) / self.stretch)

    def check_nodes(self):
        nodes = self.base.check_nodes() * self.stretch
        reps = int(round(self.period / (self.base.period * self.stretch)))
        return np.concatenate([nodes + k * self.base.period * self.stretch for k in range(max(reps, 1))])

    def __repr__(self):
        return f"RescaledLoop({self.base!r}, scale={self.scale:g}, stretch={self.stretch:g})"


class CombinedLoop(PeriodicLoop):
    """Linear combination ``sum_i coef_i * loop_i`` of loops sharing a period."""

    def __init__(self, terms: Sequence[tuple[float, PeriodicLoop]]):
        self.terms = [(float(c), lp) for c, lp in terms]
        periods = {round(lp.period, 12) for _, lp in self.terms}
        if len(periods) != 1:
            raise ValueError("combined loops must share one period")
        self.period = self.terms[0][1].period
        self.dim = self.terms[0][1].dim

    def __call__(self, s):
        return sum(c * lp(s) for c, lp in self.terms)

    def d1(self, s):
        return sum(c * lp.d1(s) for c, lp in self.terms)

    def d2(self, s):
        return sum(c * lp.d2(s) for c, lp in self.terms)

    def check_nodes(self):
        return np.unique(np.concatenate([lp.check_nodes() for _, lp in self.terms]))

    def panels(self):
        return np.unique(np.concatenate([lp.panels() for _, lp in self.terms]))


class IntegralLoop(PeriodicLoop):
    """Antiderivative ``V(x) = int_0^x v`` of a zero-mean periodic field.

    The derivative returns ``v`` itself, so ``V' = v`` holds exactly.
    Values come from composite Gauss-Legendre quadrature on the integrand's
    own panels (exact for spline integrands).
    """

    def __init__(self, integrand: PeriodicLoop):
        self.integrand = integrand
        self.period = integrand.period
        self.dim = integrand.dim
        self._edges = integrand.panels()
        self._cumulative = np.vstack(
            [np.zeros(self.dim), np.cumsum(self._panel_integrals(self._edges[:-1], self._edges[1:]), axis=0)]
        )

    def _panel_integrals(self, lo, hi):
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        pts = mid[:, None] + half[:, None] * _GL_X[None, :]
        vals = self.integrand(pts.ravel()).reshape(len(lo), len(_GL_X), self.dim)
        return half[:, None] * np.einsum("g,mgd->md", _GL_W, vals)

    @property
    def mean_drift(self) -> np.ndarray:
        """Integral of the field over one period (zero for periodic V)."""
        return self._cumulative[-1]

    def __call__(self, s):
        s_arr = np.asarray(s, float)
        flat = np.atleast_1d(s_arr).ravel()
        r = np.mod(flat, self.period)
        k = np.clip(np.searchsorted(self._edges, r, side="right") - 1, 0, len(self._edges) - 2)
        out = self._cumulative[k] + self._panel_integrals(self._edges[k], r)
        if s_arr.ndim == 0:
            return out[0]
        return out.reshape(s_arr.shape + (self.dim,))

    def d1(self, s):
        return self.integrand(s)

    def d2(self, s):
        return self.integrand.d1(s)

    def check_nodes(self):
        return self.integrand.check_nodes()

    def panels(self):
        return self._edges


VelocityField = PeriodicLoop


def velocity_mean(velocity: PeriodicLoop) -> np.ndarray:
    """Integral of a velocity field over one period."""
    return _integrate_loop(velocity)


def _integrate_loop(loop: PeriodicLoop) -> np.ndarray:
    edges = loop.panels()
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    pts = 0.5 * (hi + lo)[:, None] + half[:, None] * _GL_X[None, :]
    vals = loop(pts.ravel()).reshape(len(lo), len(_GL_X), loop.dim)
    return np.einsum("m,g,mgd->d", half, _GL_W, vals)


def total_length(curve: PeriodicLoop) -> float:
    """Length of one period of the curve.

    Exact for polylines; composite 8-point Gauss-Legendre otherwise (on the
    spline knots for spline loops, so the only error is the quadrature of
    the square root).
    """
    if isinstance(curve, PiecewiseLinearLoop):
        return float(np.sum(curve.segment_lengths * np.linalg.norm(curve.slopes, axis=1)))
    edges = curve.panels()
    if len(edges) < 257:
        edges = np.linspace(0.0, curve.period, 513)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    pts = 0.5 * (hi + lo)[:, None] + half[:, None] * _GL_X[None, :]
    speed = curve.speed(pts.ravel()).reshape(pts.shape)
    return float(np.sum(half * (speed @ _GL_W)))


class _CumulativeWeight:
    """Cumulative integral of a positive weight on a fine uniform grid, with
    accurate evaluation at arbitrary points for Newton inversion."""

    def __init__(self, weight: Callable[[np.ndarray], np.ndarray], period: float, n_fine: int):
        self.weight = weight
        self.period = period
        self.edges = np.linspace(0.0, period, n_fine + 1)
        self.hf = period / n_fine
        w_nodes = weight(self.edges)
        self.min_weight = float(np.min(w_nodes))
        self.table = np.concatenate([[0.0], np.cumsum(self._partial(self.edges[:-1], self.edges[1:]))])
        self.total = float(self.table[-1])

    def _partial(self, lo, hi):
        half = 0.5 * (hi - lo)
        pts = 0.5 * (hi + lo)[:, None] + half[:, None] * _GL_X[None, :]
        vals = self.weight(pts.ravel()).reshape(pts.shape)
        return half * (vals @ _GL_W)

    def __call__(self, s):
        k = np.clip(np.floor(s / self.hf).astype(int), 0, len(self.edges) - 2)
        return self.table[k] + self._partial(self.edges[k], s)

    def invert(self, targets: np.ndarray, iterations: int = 6) -> np.ndarray:
        """Parameters ``s`` with ``C(s) = targets`` (monotone cubic guess,
        then safeguarded Newton)."""
        guess = PchipInterpolator(self.table, self.edges)(targets)
        s = np.clip(guess, 0.0, self.period)
        for _ in range(iterations):
            resid = self(s) - targets
            step = resid / self.weight(s)
            s = np.clip(s - step, 0.0, self.period)
            if np.max(np.abs(step)) < 1e-15 * max(1.0, self.period):
                break
        return s


def reparametrize_by_weight(
    curve: PeriodicLoop,
    weight: Callable[[np.ndarray], np.ndarray],
    n: int,
    extra: Sequence[PeriodicLoop] = (),
) -> tuple[SplineLoop, list[SplineLoop], np.ndarray]:
    """Resample ``curve`` uniformly in the new parameter ``x(s) = int_0^s weight``.

    Returns the reparametrized curve, the loops in ``extra`` resampled at the
    same material points, and the old parameter values of the new nodes.
    """
    if n < MIN_SPLINE_SAMPLES:
        raise TooFewSamples(f"need at least {MIN_SPLINE_SAMPLES} samples")
    speed = curve.speed(np.linspace(0.0, curve.period, 4 * n, endpoint=False))
    if np.min(speed) < DEFAULT_TOLERANCES.regular:
        raise NonRegularCurve(f"min |curve'| = {np.min(speed):.3e}")
    cum = _CumulativeWeight(weight, curve.period, 4 * n)
    new_period = cum.total
    targets = uniform_grid(new_period, n)
    s_nodes = cum.invert(targets)
    out = SplineLoop(curve(s_nodes), new_period)
    resampled = [SplineLoop(lp(s_nodes), new_period) for lp in extra]
    return out, resampled, s_nodes


def arclength_reparametrize(curve: PeriodicLoop, n: int) -> SplineLoop:
    """Unit-speed resampling of ``curve`` on ``n`` uniform arc-length nodes."""
    out, _, _ = reparametrize_by_weight(curve, curve.speed, n)
    return out


def periodic_interpolate(samples, period: float) -> SplineLoop:
    """Periodic cubic spline through uniformly spaced samples of one period."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.shape[0] < MIN_SPLINE_SAMPLES:
        raise TooFewSamples(
            f"need at least {MIN_SPLINE_SAMPLES} samples, got {samples.shape[0]}"
        )
    return SplineLoop(samples, period)


def ellipse_loop(semi_x: float, semi_y: float) -> AnalyticLoop:
    """Ellipse on [0, 2 pi], not arc-length parametrized."""
    A, B = float(semi_x), float(semi_y)
    return AnalyticLoop(
        lambda s: np.column_stack([A * np.cos(s), B * np.sin(s)]),
        lambda s: np.column_stack([-A * np.sin(s), B * np.cos(s)]),
        lambda s: np.column_stack([-A * np.cos(s), -B * np.sin(s)]),
        2 * np.pi,
        2,
        name=f"ellipse({A:g},{B:g})",
    )
