"""Numerical substrate: quadrature, root finding, tabulation, convex hulls.

All integrands are vectorized maps: they receive a 1-D float array and
return an array of the same shape.  Every routine is pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import EnvelopeViolated, NoBracket, NonConvergent, NonFinite, NotMonotone

ScalarMap = Callable[[np.ndarray], np.ndarray]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 2**14

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("quadrature tolerances must be positive")


DEFAULT_SPEC = QuadratureSpec()
TIGHT_SPEC = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-11)


def _as_interval(iv) -> Interval:
    if isinstance(iv, Interval):
        return iv
    lo, hi = iv
    return Interval(float(lo), float(hi))


def _gauss(h: ScalarMap, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """10-point Gauss-Legendre on each [a_i, b_i], one vectorized call."""
    c = 0.5 * (a + b)
    r = 0.5 * (b - a)
    x = c[:, None] + r[:, None] * _GL_X[None, :]
    y = np.asarray(h(x.ravel()), dtype=float).reshape(x.shape)
    if not np.all(np.isfinite(y)):
        bad = x[~np.isfinite(y)][0]
        raise NonFinite(f"integrand is not finite at t={bad!r}")
    return r * (y @ _GL_W)


def _adaptive(h: ScalarMap, lo: float, hi: float, spec: QuadratureSpec,
              breakpoints: Sequence[float] = ()) -> tuple[float, float]:
    """Globally adaptive bisection; error = |G10(whole) - G10(halves)|."""
    edges = np.unique(np.concatenate([[lo, hi], [p for p in breakpoints if lo < p < hi]]))
    a, b = edges[:-1], edges[1:]
    m = 0.5 * (a + b)
    whole = _gauss(h, a, b)
    halves = _gauss(h, np.concatenate([a, m]), np.concatenate([m, b]))
    left, right = halves[: a.size], halves[a.size:]
    err = np.abs(left + right - whole)
    min_width = 1e-15 * max(hi - lo, 1e-300)
    n_done = a.size
    while True:
        total = float(np.sum(left + right))
        tol = max(spec.abs_tol, spec.rel_tol * abs(total))
        e_tot = float(np.sum(err))
        if e_tot <= tol:
            return total, e_tot
        splittable = (b - a) > min_width
        if not np.any(splittable & (err > 0)):
            return total, e_tot
        order = np.argsort(-np.where(splittable, err, -1.0), kind="stable")
        cum = np.cumsum(err[order])
        k = int(np.searchsorted(cum, e_tot - 0.5 * tol)) + 1
        sel = order[: max(1, min(k, order.size))]
        sel = sel[splittable[sel]]
        n_done += sel.size
        if n_done > spec.max_subdivisions:
            raise NonConvergent(
                f"quadrature budget exhausted on [{lo}, {hi}] (error {e_tot:.3e} > {tol:.3e})")
        keep = np.ones(a.size, dtype=bool)
        keep[sel] = False
        sa, sb = a[sel], b[sel]
        sm = 0.5 * (sa + sb)
        ca = np.concatenate([sa, sm])
        cb = np.concatenate([sm, sb])
        cwhole = np.concatenate([left[sel], right[sel]])
        cm = 0.5 * (ca + cb)
        q = _gauss(h, np.concatenate([ca, cm]), np.concatenate([cm, cb]))
        cl, cr = q[: ca.size], q[ca.size:]
        a = np.concatenate([a[keep], ca])
        b = np.concatenate([b[keep], cb])
        left = np.concatenate([left[keep], cl])
        right = np.concatenate([right[keep], cr])
        err = np.concatenate([err[keep], np.abs(cl + cr - cwhole)])


def integrate_adaptive(h: ScalarMap, iv, spec: QuadratureSpec | None = None,
                       breakpoints: Sequence[float] = ()) -> float:
    """Integral of ``h`` over ``iv`` with error below max(abs_tol, rel_tol*|I|).

    Raises:
        NonConvergent: subdivision budget exhausted.
        NonFinite: ``h`` returned NaN or inf at a quadrature node.
    """
    iv = _as_interval(iv)
    return _adaptive(h, iv.lo, iv.hi, spec or DEFAULT_SPEC, breakpoints)[0]


def integrate_left_sqrt_singular(h: ScalarMap, iv, spec: QuadratureSpec | None = None) -> float:
    """Integral of h(t) (t - lo)^(-1/2) over ``iv`` via t = lo + u^2."""
    iv = _as_interval(iv)
    lo = iv.lo

    def g(u):
        return 2.0 * h(lo + u * u)

    return _adaptive(g, 0.0, np.sqrt(iv.hi - lo), spec or DEFAULT_SPEC)[0]


def integrate_right_sqrt_singular(h: ScalarMap, iv, spec: QuadratureSpec | None = None) -> float:
    """Integral of h(t) (hi - t)^(-1/2) over ``iv`` via t = hi - u^2."""
    iv = _as_interval(iv)
    hi = iv.hi

    def g(u):
        return 2.0 * h(hi - u * u)

    return _adaptive(g, 0.0, np.sqrt(hi - iv.lo), spec or DEFAULT_SPEC)[0]


@dataclass(frozen=True)
class TailEnvelope:
    """Declared decay |h(t)| <= C exp(-c sqrt t) ("exp_sqrt") or C t^-p ("power")."""

    kind: str = "exp_sqrt"
    C: float = 1.0
    rate: float = 1.0

    def __post_init__(self):
        if self.kind not in ("exp_sqrt", "power"):
            raise ValueError(f"unknown envelope kind {self.kind!r}")
        if self.kind == "power" and self.rate <= 1.5:
            raise ValueError("power envelope needs exponent p > 3/2")
        if self.C <= 0 or self.rate <= 0:
            raise ValueError("envelope constants must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "exp_sqrt":
            return self.C * np.exp(-self.rate * np.sqrt(t))
        return self.C * t ** (-self.rate)

    def tail_bound(self, T: float) -> float:
        if self.kind == "exp_sqrt":
            c = self.rate
            x = c * np.sqrt(T)
            return self.C * 2.0 / c**2 * (1.0 + x) * np.exp(-x)
        p = self.rate
        return self.C * T ** (1.0 - p) / (p - 1.0)

    def truncation(self, lo: float, target: float) -> float:
        T = max(lo, 1.0) * 2.0
        while self.tail_bound(T) > target:
            T *= 2.0
        return T


def integrate_endpoint_substituted(h: ScalarMap, iv, spec: QuadratureSpec | None = None,
                                   split: float = 0.5) -> float:
    """Integral of ``h`` with square-root substitutions at both endpoints.

    Suited to integrands with (t-lo)^(+-1/2) or (hi-t)^(+-1/2) behaviour at
    the ends: [lo, c] uses t = lo + u^2 and [c, hi] uses t = hi - u^2.
    """
    iv = _as_interval(iv)
    spec = spec or DEFAULT_SPEC
    lo, hi = iv.lo, iv.hi
    c = lo + split * (hi - lo)

    def g_left(u):
        return 2.0 * u * h(lo + u * u)

    def g_right(u):
        return 2.0 * u * h(hi - u * u)

    v1, _ = _adaptive(g_left, 0.0, np.sqrt(c - lo), spec)
    v2, _ = _adaptive(g_right, 0.0, np.sqrt(hi - c), spec)
    return float(v1 + v2)


def integrate_tail(h: ScalarMap, lo: float, envelope: TailEnvelope,
                   spec: QuadratureSpec | None = None) -> float:
    """Integral of ``h`` over [lo, inf) truncated where the envelope tail < abs_tol/10.

    Raises:
        EnvelopeViolated: sampled |h| exceeds the envelope by more than 10x.
    """
    spec = spec or DEFAULT_SPEC
    T = envelope.truncation(lo, spec.abs_tol / 10.0)
    probe_lo = max(lo + 1.0, T / 64.0)
    probe = np.geomspace(probe_lo, T, 32)
    if np.any(np.abs(h(probe)) > 10.0 * envelope(probe)):
        raise EnvelopeViolated("integrand exceeds its declared decay envelope")
    if envelope.kind == "exp_sqrt":
        # u = sqrt(t) turns exp(-c sqrt t) into exp(-c u) and removes t^-1/2 at 0
        def g(u):
            return 2.0 * u * h(u * u)
        val, _ = _adaptive(g, np.sqrt(lo), np.sqrt(T), spec)
    else:
        if lo > 0:
            def g(x):
                t = np.exp(x)
                return t * h(t)
            val, _ = _adaptive(g, np.log(lo), np.log(T), spec)
        else:
            v0, _ = _adaptive(h, 0.0, 1.0, spec)
            def g(x):
                t = np.exp(x)
                return t * h(t)
            v1, _ = _adaptive(g, 0.0, np.log(T), spec)
            val = v0 + v1
    return float(val)


def brent_root(h: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    """Bracketed root of a scalar function (Brent's method)."""
    flo, fhi = float(h(lo)), float(h(hi))
    if flo == 0.0:
        return float(lo)
    if fhi == 0.0:
        return float(hi)
    if np.sign(flo) == np.sign(fhi):
        raise NoBracket(f"no sign change on [{lo}, {hi}]: h={flo:.3e}, {fhi:.3e}")
    return float(brentq(h, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500))


def cosine_grid(lo: float, hi: float, n: int = 512) -> np.ndarray:
    """n nodes on [lo, hi] clustered toward both ends."""
    x = 0.5 * (1.0 - np.cos(np.pi * np.arange(n) / (n - 1)))
    g = lo + (hi - lo) * x
    g[0], g[-1] = lo, hi
    return g


def _monotone_direction(values: np.ndarray) -> str:
    d = np.diff(values)
    if np.all(d > 0):
        return "increasing"
    if np.all(d < 0):
        return "decreasing"
    return "none"


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Tabulated scalar function with shape-preserving interpolation.

    ``kind="pchip"`` uses monotone cubic Hermite interpolation (no
    overshoot between nodes); ``kind="linear"`` joins nodes by segments.
    """

    grid: np.ndarray
    values: np.ndarray
    monotone_flag: str = "none"
    kind: str = "pchip"
    _interp: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise ValueError("grid and values must be 1-D arrays of equal length")
        if grid.size < 4:
            raise ValueError("a SampledFunction needs at least 4 nodes")
        if not np.all(np.diff(grid) > 0):
            raise ValueError("grid must be strictly increasing")
        if self.monotone_flag not in ("increasing", "decreasing", "none"):
            raise ValueError(f"bad monotone flag {self.monotone_flag!r}")
        if self.monotone_flag != "none" and _monotone_direction(values) != self.monotone_flag:
            raise NotMonotone(f"values are not strictly {self.monotone_flag}")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if self.kind == "pchip":
            object.__setattr__(self, "_interp", PchipInterpolator(grid, values, extrapolate=True))
        elif self.kind != "linear":
            raise ValueError(f"unknown interpolation kind {self.kind!r}")

    @classmethod
    def tabulate(cls, f: ScalarMap, lo: float, hi: float, n: int = 512,
                 monotone_flag: str | None = None) -> "SampledFunction":
        grid = cosine_grid(lo, hi, n)
        values = np.asarray(f(grid), dtype=float)
        flag = _monotone_direction(values) if monotone_flag is None else monotone_flag
        return cls(grid, values, flag)

    @property
    def lo(self) -> float:
        return float(self.grid[0])

    @property
    def hi(self) -> float:
        return float(self.grid[-1])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "linear":
            return np.interp(x, self.grid, self.values)
        return self._interp(x)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "linear":
            slopes = np.diff(self.values) / np.diff(self.grid)
            idx = np.clip(np.searchsorted(self.grid, x, side="right") - 1, 0, slopes.size - 1)
            return slopes[idx]
        return self._interp.derivative()(x)


def invert_monotone(sf: SampledFunction) -> SampledFunction:
    """Inverse tabulation of a strictly monotone SampledFunction."""
    if sf.monotone_flag == "none":
        raise NotMonotone("cannot invert a function without a monotone flag")
    if sf.monotone_flag == "increasing":
        return SampledFunction(sf.values.copy(), sf.grid.copy(), "increasing", sf.kind)
    return SampledFunction(sf.values[::-1].copy(), sf.grid[::-1].copy(), "decreasing", sf.kind)


def lower_hull_indices(grid: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Indices of the vertices of the lower convex hull (monotone chain)."""
    hull: list[int] = []
    for i in range(grid.size):
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (grid[a] - grid[o]) * (values[i] - values[o]) - (values[a] - values[o]) * (grid[i] - grid[o])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=int)


def lower_convex_envelope(grid, values) -> SampledFunction:
    """Lower convex hull of the graph points, sampled back on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if not np.all(np.diff(grid) > 0):
        raise ValueError("grid must be strictly increasing")
    idx = lower_hull_indices(grid, values)
    env = np.interp(grid, grid[idx], values[idx])
    env = np.minimum(env, values)
    return SampledFunction(grid, env, "none", kind="linear")


def numeric_derivative(f: ScalarMap, x, lo: float, hi: float, rel_step: float = 1e-6):
    """Central differences with step rel_step*(hi-lo), one-sided at the ends."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h = rel_step * (hi - lo)
    xp = np.minimum(x + h, hi)
    xm = np.maximum(x - h, lo)
    return (f(xp) - f(xm)) / (xp - xm)


def invert_map(F: ScalarMap, y, lo: float, hi: float, xtol: float = 1e-15) -> np.ndarray:
    """Solve F(x) = y for increasing F on [lo, hi], elementwise (vectorized bisection+secant)."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    a = np.full_like(y, lo)
    b = np.full_like(y, hi)
    fa = F(a) - y
    fb = F(b) - y
    x = np.where(np.abs(fa) < np.abs(fb), a, b)
    for _ in range(200):
        # regula falsi step guarded by bisection
        denom = fb - fa
        with np.errstate(divide="ignore", invalid="ignore"):
            xs = b - fb * (b - a) / denom
        mid = 0.5 * (a + b)
        ok = np.isfinite(xs) & (xs > a) & (xs < b)
        x = np.where(ok, xs, mid)
        # alternate with bisection to avoid stagnation
        x = np.where(_ % 2 == 1, mid, x)
        fx = F(x) - y
        left = fx < 0
        a = np.where(left, x, a)
        fa = np.where(left, fx, fa)
        b = np.where(left, b, x)
        fb = np.where(left, fb, fx)
        if np.all(b - a <= xtol * np.maximum(1.0, np.abs(x))):
            break
    return np.where(np.abs(fa) < np.abs(fb), a, b)
