"""Model ingredients that realize a prescribed cohesive law.

Linear regime (sigma < inf), after normalizing to sigma = 1:

    R(t)    = g0((g0')^{-1}((1 - t)^(1/2))),   R'(t) = 1 / (2 |g0''|)
    phi(t)  = (1/pi) int_0^t R'(r) (t - r)^(-1/2) dr
    omega0(1-t) = [(khat0^(1/2))'(t) phi(1 - khat0(t))]^2              (khat0 fixed)
    fhat0^{-1}(1-t) = Psi0^{-1}(g0(inf)/2 - I(t)/2),
        I(t) = int_0^t phi(tau) (1 - tau)^(-1/2) dtau                   (omega0 fixed)

Superlinear regime (sigma = inf):

    R(t)    = g0((g0')^{-1}(t^(1/2))),   R'(t) = 1 / (2 g0'') < 0
    phi(t)  = -(1/pi) int_t^inf R'(r) (r - t)^(-1/2) dr
    omega0(1-t) = [(khat0^(1/2))'(t) phi(khat0(t))]^2
    khat0^{-1}(t) = Psi0^{-1}(g0(inf)/2 - J(t)/2),  J(t) = int_t^inf phi(tau) tau^(-1/2) dtau

I and J are evaluated with the order of integration swapped, which turns
the nested singular integrals into single integrals against bounded
kernels:

    I(t) = (2/pi) int_0^t R'(r) asin(((t - r)/(1 - r))^(1/2)) dr
    J(t) = -(2/pi) int_t^inf R'(r) acos((t/r)^(1/2)) dr

and their complements g0(inf) - I, g0(inf) - J are integrated directly so
that both ends of the tables keep full relative accuracy.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.special import expit

from .errors import CompatibilityError, HypothesisViolation, NonConvergent, NotInvertible
from .model import (
    HypothesisReport,
    PhaseFieldModel,
    TargetCohesiveLaw,
    extrapolate_sigma,
    make_model,
    validate_target,
)
from .numerics import (
    QuadratureSpec,
    SampledFunction,
    TailEnvelope,
    _adaptive,
    cosine_grid,
    integrate_endpoint_substituted,
    integrate_tail,
    invert_map,
    invert_monotone,
    numeric_derivative,
)

ScalarMap = Callable[[np.ndarray], np.ndarray]

PHI_SPEC = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-12, max_subdivisions=2**14)
TAIL_SPEC = QuadratureSpec(abs_tol=1e-30, rel_tol=1e-12, max_subdivisions=2**14)
LOOSE_SPEC = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-10, max_subdivisions=2**16)
COMPAT_TOL = 1e-8
Z_RANGE = 30.0
N_PHI_NODES = 1200
N_OUTPUT_NODES = 512


def _arr(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def _vectorize(f: Callable[[float], float], x):
    """Apply a scalar routine elementwise; scalars in, scalars out."""
    xa = np.asarray(x, dtype=float)
    out = np.array([f(float(v)) for v in xa.ravel()]).reshape(xa.shape)
    return float(out) if xa.ndim == 0 else out


def _adaptive_val(h, lo, hi, spec=PHI_SPEC, breakpoints=()) -> float:
    try:
        return _adaptive(h, lo, hi, spec, breakpoints)[0]
    except NonConvergent:
        loose = QuadratureSpec(abs_tol=max(spec.abs_tol, 1e-12), rel_tol=1e-9, max_subdivisions=2**16)
        return _adaptive(h, lo, hi, loose, breakpoints)[0]


# ---------------------------------------------------------------------------
# R


@dataclass(frozen=True, eq=False)
class RFunction:
    regime: str
    R: ScalarMap
    R_prime: ScalarMap
    domain_hi: float
    R_at_sigma2: float
    sigma: float
    breakpoints: tuple = ()
    envelope: Optional[TailEnvelope] = None
    R_prime_gap: Optional[ScalarMap] = None  # linear: R'(sigma^2 - d) as a function of d


def _prime_inverse(target: TargetCohesiveLaw) -> ScalarMap:
    """Vectorized (g0')^{-1}, closed form when the target supplies one."""
    if target.g0_prime_inv is not None:
        return target.g0_prime_inv
    S = target.s_effective()
    hi = float(target.s_frac0) if np.isfinite(target.s_frac0) else 1e3 * S

    def neg(s):
        return -_arr(target.g0_prime(s))

    def inv(y):
        y = _arr(y)
        return invert_map(neg, -y, 0.0, hi).reshape(y.shape)

    return inv


def _check_strictly_decreasing(target: TargetCohesiveLaw) -> None:
    S = target.s_effective()
    if target.regime == "linear":
        s = np.linspace(0.0, S, 4001)[:-1]
    else:
        s = S * np.geomspace(1e-10, 1.0, 4001)[:-1]
    gp = _arr(target.g0_prime(s))
    d = np.diff(gp)
    if np.any(d >= 0):
        i = int(np.argmax(d >= 0))
        raise NotInvertible(
            f"g0' is not strictly decreasing near s={s[i]:.6g}; for a Dugdale-type law "
            "use the catalog 'dugdale' models (min(sigma s, 2 Psi(1)) route) instead")


def _default_envelope(R_prime: ScalarMap) -> TailEnvelope:
    t = np.geomspace(1.0, 1e4, 200)
    with np.errstate(all="ignore"):
        ratio = np.abs(_arr(R_prime(t))) * np.exp(0.5 * np.sqrt(t))
    C = 2.0 * float(np.nanmax(ratio)) if np.any(np.isfinite(ratio)) else 1.0
    return TailEnvelope("exp_sqrt", max(C, 1e-300), 0.5)


def build_R(target: TargetCohesiveLaw) -> RFunction:
    """The auxiliary function R of the target and its derivative.

    Raises:
        NotInvertible: g0' is not strictly decreasing where it is inverted.
    """
    _check_strictly_decreasing(target)
    inv = _prime_inverse(target)
    sf = float(target.s_frac0)
    s_cap = sf * (1.0 - 1e-12) if np.isfinite(sf) else np.inf

    def s_of(y):
        return np.minimum(_arr(inv(y)), s_cap)

    if target.regime == "linear":
        s2 = target.sigma ** 2

        def R(t):
            t = _arr(t)
            y = np.sqrt(np.maximum(s2 - t, 0.0))
            with np.errstate(all="ignore"):
                v = _arr(target.g0(s_of(y)))
            return np.where(t >= s2, target.g_inf, v)

        def R_prime_gap(d):
            y = np.sqrt(np.maximum(_arr(d), 0.0))
            with np.errstate(all="ignore"):
                return -0.5 / _arr(target.second(s_of(y)))

        def R_prime(t):
            return R_prime_gap(s2 - _arr(t))

        bps = tuple(sorted(s2 - float(target.g0_prime(np.array([k]))[0]) ** 2 for k in target.kinks))
        return RFunction("linear", R, R_prime, s2, target.g_inf, target.sigma, bps, None, R_prime_gap)

    def R(t):
        t = _arr(t)
        with np.errstate(all="ignore"):
            v = _arr(target.g0(s_of(np.sqrt(np.maximum(t, 0.0)))))
        return np.where(t <= 0, target.g_inf, v)

    def R_prime(t):
        t = _arr(t)
        with np.errstate(all="ignore"):
            return 0.5 / _arr(target.second(s_of(np.sqrt(np.maximum(t, 0.0)))))

    env = target.decay_envelope or _default_envelope(R_prime)
    bps = tuple(sorted(float(target.g0_prime(np.array([k]))[0]) ** 2 for k in target.kinks))
    return RFunction("superlinear", R, R_prime, float("inf"), target.g_inf, float("inf"), bps, env)


# ---------------------------------------------------------------------------
# Abel inversion


def _phi_linear(R: RFunction, t: float, gap: float) -> float:
    """phi at tau = t = sigma^2 - gap, both supplied to avoid cancellation."""
    if t <= 0.0:
        return 0.0
    if gap <= 0.0 and not np.isfinite(float(_arr(R.R_prime(np.array([R.domain_hi])))[0])):
        return float("inf")
    bps = [np.sqrt(t - b) for b in R.breakpoints if 0.0 < b < t]
    if 0.0 < gap < 1e-4 * R.domain_hi:
        # R' may peak at t -> sigma^2 on the scale u ~ gap^(1/2)
        bps += [v for v in np.sqrt(gap) * np.geomspace(1.0, 1e6, 13) if v < np.sqrt(t)]
    if R.R_prime_gap is not None:
        def h(u):
            return R.R_prime_gap(np.minimum(gap + u * u, R.domain_hi))
    else:
        def h(u):
            return R.R_prime(np.maximum(t - u * u, 0.0))
    return 2.0 / np.pi * _adaptive_val(h, 0.0, np.sqrt(t), PHI_SPEC, bps)


def abel_invert_linear(R: RFunction, tau):
    """phi(tau) = (2/pi) int_0^{tau^(1/2)} R'(tau - u^2) du  (t = tau - u^2)."""
    if R.regime != "linear":
        raise ValueError("abel_invert_linear needs a linear-regime R")
    return _vectorize(lambda t: _phi_linear(R, t, R.domain_hi - t), tau)


def abel_invert_linear_gap(R: RFunction, gap):
    """phi(sigma^2 - gap), accurate when gap is small."""
    if R.regime != "linear":
        raise ValueError("abel_invert_linear_gap needs a linear-regime R")
    return _vectorize(lambda d: _phi_linear(R, R.domain_hi - d, d), gap)


def abel_invert_super(R: RFunction, tau):
    """phi(tau) = -(1/pi) int_tau^inf R'(t) (t - tau)^(-1/2) dt.

    [tau, tau + 1] uses t = tau + u^2; the rest goes to ``integrate_tail``
    under the declared decay envelope of R'.
    """
    if R.regime != "superlinear":
        raise ValueError("abel_invert_super needs a superlinear-regime R")

    def one(t: float) -> float:
        t = max(t, 0.0)
        bps = [np.sqrt(b - t) for b in R.breakpoints if t < b < t + 1.0]
        near = 2.0 * _adaptive_val(lambda u: R.R_prime(t + u * u), 0.0, 1.0, PHI_SPEC, bps)
        far = integrate_tail(lambda x: R.R_prime(x) / np.sqrt(x - t), t + 1.0, R.envelope, TAIL_SPEC)
        return -(near + far) / np.pi

    return _vectorize(one, tau)


def abel_forward(phi: ScalarMap, R: RFunction, t, t_max: float | None = None):
    """Apply the Abel operator to phi: int_0^t phi(tau)(t-tau)^(-1/2) (linear)
    or int_t^inf phi(tau)(tau-t)^(-1/2) (superlinear, truncated at t_max)."""
    if R.regime == "linear":
        def one(x: float) -> float:
            if x <= 0:
                return 0.0
            bps = [np.sqrt(x - b) for b in R.breakpoints if 0.0 < b < x]
            return 2.0 * _adaptive_val(lambda u: phi(np.maximum(x - u * u, 0.0)), 0.0, np.sqrt(x),
                                       PHI_SPEC, bps)
    else:
        T = t_max if t_max is not None else _super_tmax(R)

        def one(x: float) -> float:
            return 2.0 * _adaptive_val(lambda u: phi(x + u * u), 0.0, np.sqrt(max(T - x, 1e-300)), PHI_SPEC)

    return _vectorize(one, t)


def _super_tmax(R: RFunction) -> float:
    return R.envelope.truncation(1.0, 1e-16 * max(abs(R.R_at_sigma2), 1e-300))


# ---------------------------------------------------------------------------
# phi tables


@dataclass(frozen=True, eq=False)
class SmallPhi:
    """phi tabulated for fast evaluation; ``exact`` recomputes by quadrature.

    Linear regime: one table per interval [a, b] between the breakpoints of
    R', with nodes uniform in z = log(tau - a) - log(b - tau), so that the
    square-root behaviour after a breakpoint and both ends stay resolved.
    Superlinear: nodes in r = tau^(1/2) up to ``t_max``.  log(phi) is
    interpolated by cubic splines and extrapolated linearly.
    """

    regime: str
    phi: SampledFunction
    R: RFunction
    t_max: float
    edges: tuple = ()
    splines: tuple = field(repr=False, default=())

    def exact(self, tau):
        if self.regime == "linear":
            return abel_invert_linear(self.R, tau)
        return abel_invert_super(self.R, tau)

    @staticmethod
    def _spline_eval(p, z, clamp_lo=False, clamp_hi=False):
        # at interior breakpoints phi is finite and nonzero, so the table is
        # held constant past its end nodes instead of extrapolated
        lo, hi = p.x[0], p.x[-1]
        zz = np.clip(z, lo, hi)
        v = p(zz)
        below, above = (z < lo) & (not clamp_lo), (z > hi) & (not clamp_hi)
        if np.any(below):
            v = v + np.where(below, p(lo, 1) * (z - lo), 0.0)
        if np.any(above):
            v = v + np.where(above, p(hi, 1) * (z - hi), 0.0)
        return np.exp(v)

    def __call__(self, tau):
        tau = _arr(tau)
        if self.regime != "linear":
            return self._spline_eval(self.splines[0], np.sqrt(np.maximum(tau, 0.0)))
        edges = np.asarray(self.edges)
        # a breakpoint belongs to the segment on its left, where phi is smooth
        idx = np.clip(np.searchsorted(edges, tau, side="left") - 1, 0, len(self.splines) - 1)
        out = np.empty(tau.shape)
        for i, sp in enumerate(self.splines):
            sel = idx == i
            if not np.any(sel):
                continue
            a, b = edges[i], edges[i + 1]
            x = tau[sel]
            with np.errstate(divide="ignore", invalid="ignore"):
                z = np.log(np.maximum(x - a, 1e-300 * b)) - np.log(np.maximum(b - x, 1e-300 * b))
            out[sel] = self._spline_eval(sp, z, clamp_lo=i > 0, clamp_hi=i < len(self.splines) - 1)
        return np.where(tau <= 0, 0.0, out)

    def exact_gap(self, gap):
        return abel_invert_linear_gap(self.R, gap)

    def at_gap(self, gap):
        """phi(sigma^2 - gap) from the table, with the last segment's variable
        computed from ``gap`` directly."""
        gap = _arr(gap)
        s2 = self.R.domain_hi
        tau = s2 - gap
        a = self.edges[-2]
        last = tau > a
        out = self(np.where(last, a, tau))
        if np.any(last):
            with np.errstate(divide="ignore", invalid="ignore"):
                z = np.log(np.maximum(s2 - a - gap, 1e-300)) - np.log(np.maximum(gap, 1e-300 * s2))
            out = np.where(last, self._spline_eval(self.splines[-1], z, clamp_lo=len(self.splines) > 1), out)
        return np.where(tau <= 0, 0.0, out)


def _segment_nodes(a: float, b: float, n: int) -> np.ndarray:
    z = np.linspace(-Z_RANGE, Z_RANGE, n)
    x = a + (b - a) / (1.0 + np.exp(-z))
    x = np.unique(x[(x > a) & (x < b)])
    return x


def build_small_phi(R: RFunction, n: int = N_PHI_NODES) -> SmallPhi:
    """Exact phi on a clustered grid, wrapped in a fast interpolant."""
    if R.regime == "linear":
        s2 = R.domain_hi
        edges = (0.0,) + tuple(b for b in R.breakpoints if 0.0 < b < s2) + (s2,)
        nseg = len(edges) - 1
        per = max(n // nseg, 600)
        splines, all_tau, all_val = [], [], []
        for a, b in zip(edges[:-1], edges[1:]):
            tau = _segment_nodes(a, b, per)
            vals = _arr(abel_invert_linear(R, tau))
            keep = vals > 0
            if np.count_nonzero(keep) < 8 or not np.all(keep[len(keep) // 2:]):
                raise NotInvertible("phi is not positive on the tabulation grid")
            tau, vals = tau[keep], vals[keep]
            z = np.log(tau - a) - np.log(b - tau)
            zk = np.concatenate([[True], np.diff(z) > 0])
            splines.append(CubicSpline(z[zk], np.log(vals[zk]), extrapolate=True))
            all_tau.append(tau)
            all_val.append(vals)
        tau = np.concatenate(all_tau)
        vals = np.concatenate(all_val)
        order = np.argsort(tau)
        tau, vals = tau[order], vals[order]
        uniq = np.concatenate([[True], np.diff(tau) > 0])
        tau, vals = tau[uniq], vals[uniq]
        t_max = s2
    else:
        t_max = _super_tmax(R)
        r = np.unique(np.concatenate([[0.0], np.geomspace(1e-7, 1.0, n // 4),
                                      np.linspace(1.0, np.sqrt(t_max), n - n // 4)]))
        tau = r * r
        vals = _arr(abel_invert_super(R, tau))
        keep = vals > 0
        if np.count_nonzero(keep) < 8:
            raise NotInvertible("phi is not positive on the tabulation grid")
        tau, vals, r = tau[keep], vals[keep], r[keep]
        splines = [CubicSpline(r, np.log(vals), extrapolate=True)]
        edges = (0.0, float(t_max))
    flag = "increasing" if R.regime == "linear" else "none"
    try:
        sf = SampledFunction(tau, vals, flag)
    except Exception:  # noqa: BLE001 - non-monotone phi is reported, not fatal
        sf = SampledFunction(tau, vals, "none")
    return SmallPhi(R.regime, sf, R, float(t_max), tuple(edges), tuple(splines))


# ---------------------------------------------------------------------------
# I and J by swapped integration order


def I_linear(R: RFunction, t):
    """(I(t), g0(inf) - I(t)) for sigma = 1."""

    def one(x: float) -> tuple[float, float]:
        if x <= 0:
            return 0.0, float(_full_R_integral(R))
        x = min(x, 1.0)
        bps = [b for b in R.breakpoints if 0 < b < x]

        def k_as(r):
            q = np.clip((x - r) / np.maximum(1.0 - r, 1e-300), 0.0, 1.0)
            return R.R_prime(r) * np.arcsin(np.sqrt(q))

        def k_ac(r):
            q = np.clip((x - r) / np.maximum(1.0 - r, 1e-300), 0.0, 1.0)
            return R.R_prime(r) * np.arccos(np.sqrt(q))

        I = 2.0 / np.pi * _pieces(k_as, 0.0, x, bps)
        comp = 2.0 / np.pi * _pieces(k_ac, 0.0, x, bps)
        if x < 1.0:
            comp += _pieces(R.R_prime, x, 1.0, [b for b in R.breakpoints if x < b < 1.0])
        return I, comp

    ta = np.atleast_1d(_arr(t))
    res = np.array([one(float(v)) for v in ta]).reshape(-1, 2)
    return res[:, 0], res[:, 1]


def _full_R_integral(R: RFunction) -> float:
    return _pieces(R.R_prime, 0.0, 1.0, list(R.breakpoints))


def _pieces(h, lo, hi, bps) -> float:
    edges = [lo] + sorted(b for b in bps if lo < b < hi) + [hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            try:
                total += integrate_endpoint_substituted(h, (a, b), PHI_SPEC)
            except NonConvergent:
                total += integrate_endpoint_substituted(h, (a, b), LOOSE_SPEC)
    return total


def J_super(R: RFunction, t):
    """(J(t), g0(inf) - J(t)) in the superlinear regime."""
    env = R.envelope

    def one(x: float) -> tuple[float, float]:
        x = max(x, 0.0)
        hi = x + 1.0

        def k_ac(r):
            return R.R_prime(r) * np.arccos(np.sqrt(np.clip(x / r, 0.0, 1.0)))

        def k_as(r):
            return R.R_prime(r) * np.arcsin(np.sqrt(np.clip(x / r, 0.0, 1.0)))

        bps = [b for b in R.breakpoints if x < b < hi]
        J = _pieces(k_ac, x, hi, bps) + integrate_tail(k_ac, hi, env, TAIL_SPEC)
        comp = _pieces(k_as, x, hi, bps) + integrate_tail(k_as, hi, env, TAIL_SPEC)
        comp = (2.0 / np.pi) * comp
        if x > 0:
            comp += _pieces(R.R_prime, 0.0, x, [b for b in R.breakpoints if 0 < b < x])
        return -2.0 / np.pi * J, -comp

    ta = np.atleast_1d(_arr(t))
    res = np.array([one(float(v)) for v in ta]).reshape(-1, 2)
    return res[:, 0], res[:, 1]


# ---------------------------------------------------------------------------
# Psi tables for a fixed omega


class PsiTable:
    """Psi(x) = int_0^x omega(1-tau)^(1/2) and its complement Psi(1) - Psi(x).

    Both are interpolated in log-log variables from their own end, and
    ``inverse`` polishes the table seed with Newton steps on exact integrals.
    """

    def __init__(self, omega_reflected: ScalarMap, n: int = 1025):
        self.w = omega_reflected
        self.h = lambda t: np.sqrt(np.maximum(_arr(omega_reflected(t)), 0.0))
        x = cosine_grid(0.0, 1.0, n)
        cells = np.array([integrate_endpoint_substituted(self.h, (a, b), PHI_SPEC) for a, b in zip(x[:-1], x[1:])])
        left = np.concatenate([[0.0], np.cumsum(cells)])
        right = np.concatenate([np.cumsum(cells[::-1])[::-1], [0.0]])
        self.total = float(left[-1])
        self.x = x
        self.left = left
        self.right = right
        inner = slice(1, -1)
        self._lo = PchipInterpolator(np.log(x[inner]), np.log(left[inner]))
        self._hi = PchipInterpolator(np.log1p(-x[inner])[::-1], np.log(right[inner])[::-1])

    def _eval(self, interp, v):
        lo, hi = interp.x[0], interp.x[-1]
        d = interp.derivative()
        vv = np.clip(v, lo, hi)
        return np.exp(interp(vv) + np.where(v < lo, d(lo) * (v - lo), 0.0) + np.where(v > hi, d(hi) * (v - hi), 0.0))

    def _left(self, x):
        with np.errstate(divide="ignore"):
            return self._eval(self._lo, np.log(np.maximum(x, 1e-300)))

    def _right(self, x):
        with np.errstate(divide="ignore"):
            return self._eval(self._hi, np.log(np.maximum(1.0 - x, 1e-300)))

    def psi(self, x):
        x = np.clip(_arr(x), 0.0, 1.0)
        out = np.where(x <= 0.5, self._left(x), self.total - self._right(x))
        return np.where(x <= 0, 0.0, np.where(x >= 1, self.total, out))

    def psibar(self, x):
        x = np.clip(_arr(x), 0.0, 1.0)
        out = np.where(x > 0.5, self._right(x), self.total - self._left(x))
        return np.where(x >= 1, 0.0, np.where(x <= 0, self.total, out))

    def exact(self, x: float) -> float:
        """Psi(x) from the nearest node plus one quadrature."""
        i = int(np.clip(np.searchsorted(self.x, x) - 1, 0, self.x.size - 2))
        a = self.x[i]
        return float(self.left[i] + (integrate_endpoint_substituted(self.h, (a, x), PHI_SPEC) if x > a else 0.0))

    def inverse(self, y):
        """Psi^{-1}(y) for y in [0, Psi(1)]: table seed, then Newton on exact integrals."""
        ya = _arr(y)
        flat = np.clip(ya.ravel(), 0.0, self.total)
        seed = invert_map(self.psi, flat, 0.0, 1.0)
        out = np.empty_like(flat)
        for i, (v, x) in enumerate(zip(flat, seed)):
            if v <= 0 or v >= self.total:
                out[i] = 0.0 if v <= 0 else 1.0
                continue
            x = float(x)
            for _ in range(3):
                d = float(self.h(np.array([x]))[0])
                if not (d > 0 and np.isfinite(d)):
                    break
                step = (self.exact(x) - v) / d
                x = float(np.clip(x - step, 0.0, 1.0))
                if abs(step) < 1e-15:
                    break
            out[i] = x
        out = out.reshape(ya.shape)
        return float(out) if ya.ndim == 0 else out


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    """Produced ingredient (tabulated) plus callables for the full model.

    ``ingredients`` holds the model maps at the exported scale: fhat, Qfun,
    omega, omega_reflected, khat, khat_prime and optionally khat_complement.
    """

    fixed_ingredient: str
    produced_kind: str
    regime: str
    produced: SampledFunction
    sigma_scaling: float
    diagnostics: dict
    ingredients: dict
    small_phi: SmallPhi = field(repr=False, default=None)
    produced_inverse: Optional[SampledFunction] = None

    def to_model(self, check: bool = False, name: str = "reconstructed") -> PhaseFieldModel:
        ing = self.ingredients
        return make_model(ing["fhat"], ing["Qfun"], ing["omega"], khat=ing["khat"],
                          khat_prime=ing["khat_prime"], omega_reflected=ing["omega_reflected"],
                          sigma=ing["sigma"], psi1=ing.get("psi1"), name=name, check=check,
                          khat_complement=ing.get("khat_complement"))


def _normalized_target(target: TargetCohesiveLaw) -> TargetCohesiveLaw:
    """g0 / sigma, so that the reconstruction runs at sigma = 1."""
    s = target.sigma
    if s == 1.0:
        return target
    inv = target.g0_prime_inv
    return replace(
        target,
        g0=lambda x: _arr(target.g0(x)) / s,
        g0_prime=lambda x: _arr(target.g0_prime(x)) / s,
        g0_second=(lambda x: _arr(target.g0_second(x)) / s) if target.g0_second is not None else None,
        g0_prime_inv=(lambda y: inv(_arr(y) * s)) if inv is not None else None,
        sigma=1.0,
        g_inf=target.g_inf / s,
    )


def _require_valid(target: TargetCohesiveLaw, regime: str | None) -> HypothesisReport:
    regime = regime or target.regime
    if regime != target.regime:
        raise HypothesisViolation(f"target regime is {target.regime}, requested {regime}")
    rep = validate_target(target)
    failed = [n for n in rep.failed() if n != "linear_R_integrable"]
    if failed:
        msg = f"target violates {', '.join(failed)}"
        if "linear_slope_decreasing" in failed:
            msg += ("; g0' is not strictly decreasing, so the Abel route does not apply. For a Dugdale "
                    "law g = min(sigma s, G) use the catalog 'dugdale' models, whose cohesive law is "
                    "min(sigma s, 2 Psi(1)) for any model with non-decreasing Phi")
        raise HypothesisViolation(msg, rep)
    if "linear_R_integrable" in rep.failed():
        warnings.warn("R' is not in L^p for any p > 2 near sigma^2: the produced omega may be "
                      "unbounded at 1 (integrable singularity)", RuntimeWarning)
    return rep


def _sqrt_derivative(khat0: ScalarMap, khat0_prime: ScalarMap | None) -> ScalarMap:
    if khat0_prime is not None:
        def raw(t):
            with np.errstate(divide="ignore", invalid="ignore"):
                return _arr(khat0_prime(t)) / (2.0 * np.sqrt(_arr(khat0(t))))

        def d(t):
            t = _arr(t)
            v = raw(t)
            bad = ~np.isfinite(v) & (t < 0.5)
            if np.any(bad):
                # one-sided limit at t = 0 where khat0'/(2 khat0^(1/2)) is 0/0
                v = np.where(bad, raw(np.maximum(t, 1e-9)), v)
            return v
        return d

    def d(t):
        t = _arr(t)
        sq = lambda x: np.sqrt(np.maximum(_arr(khat0(x)), 0.0))  # noqa: E731
        return numeric_derivative(sq, t, 0.0, 1.0, rel_step=1e-6).reshape(t.shape)

    return d


def _abel_err(sp: SmallPhi, n: int = 24) -> float:
    R = sp.R
    if R.regime == "linear":
        t = np.linspace(0.0, R.domain_hi * (1 - 1e-3), n + 1)[1:]
        ref = _arr(R.R(t))
    else:
        t = np.linspace(0.0, sp.t_max / 2, n)
        ref = _arr(R.R(t))
        t = np.where(t <= 0, 0.0, t)
    got = _arr(abel_forward(sp, R, t, sp.t_max))
    return float(np.max(np.abs(got - ref)))


def omega_from_khat(target: TargetCohesiveLaw, khat0: ScalarMap, regime: str | None = None,
                    khat0_prime: ScalarMap | None = None, n_nodes: int = N_OUTPUT_NODES,
                    abel_check: bool = True) -> ReconstructionResult:
    """omega0 realizing ``target`` for the prescribed khat0.

    Raises:
        HypothesisViolation: the target or khat0 violates the hypotheses.
    """
    rep = _require_valid(target, regime)
    sigma = target.sigma
    superlinear = target.regime == "superlinear"
    k_end = extrapolate_sigma(khat0)
    k0 = float(_arr(khat0(np.array([0.0])))[0])
    if abs(k0) > 1e-12:
        raise HypothesisViolation(f"khat0(0) = {k0} must vanish")
    if superlinear and np.isfinite(k_end):
        raise HypothesisViolation("superlinear reconstruction needs khat0(1-) = inf")
    if not superlinear and abs(k_end - sigma) > 1e-6 * sigma:
        raise HypothesisViolation(f"khat0(1-)^(1/2) = {k_end} differs from sigma = {sigma}")
    tg = target if superlinear else _normalized_target(target)
    R = build_R(tg)
    sp = build_small_phi(R)
    s2 = 1.0 if not superlinear else None

    if superlinear:
        kt = khat0
        dsq = _sqrt_derivative(khat0, khat0_prime)
    else:
        def kt(t):
            return _arr(khat0(t)) / sigma ** 2
        base = _sqrt_derivative(khat0, khat0_prime)

        def dsq(t):
            return _arr(base(t)) / sigma

    def phi_fast(t):
        if superlinear:
            return sp(_arr(kt(t)))
        return sp.at_gap(np.clip(_arr(kt(t)), 0.0, 1.0))

    def phi_exact(t):
        if superlinear:
            return _arr(sp.exact(_arr(kt(t))))
        return _arr(sp.exact_gap(np.clip(_arr(kt(t)), 0.0, 1.0)))

    def w_fast(t):
        t = _arr(t)
        with np.errstate(all="ignore"):
            v = (_arr(dsq(t)) * phi_fast(t)) ** 2
        return np.where(np.isfinite(v), v, np.inf)

    def w_exact(t):
        t = _arr(t)
        return (_arr(dsq(t)) * phi_exact(t)) ** 2

    grid = cosine_grid(0.0, 1.0, n_nodes)
    inner = grid[1:-1] if superlinear else grid
    if not superlinear and not np.isfinite(float(_arr(R.R_prime(np.array([1.0])))[0])):
        # phi blows up at sigma^2: the table stops at khat0 / sigma^2 = 1e-6
        inner = inner[_arr(kt(inner)) >= 1e-6]
        diag_note = "omega0 unbounded at 1; produced grid starts where khat0 = 1e-6 sigma^2"
    else:
        diag_note = ""
    vals = w_exact(inner)
    produced = SampledFunction(inner, vals, "none")
    diag = {"hypothesis_report": rep.to_dict(), "forward_roundtrip_err": None,
            "abel_roundtrip_err": _abel_err(sp) if abel_check else None}
    if diag_note:
        diag["note"] = diag_note
    if superlinear:
        diag["phi0_times_pi"] = float(np.pi * sp.exact(0.0))
        diag["s_frac0"] = float(target.s_frac0)
        kp = khat0_prime or (lambda t: numeric_derivative(khat0, _arr(t), 0.0, 1.0).reshape(_arr(t).shape))

        def fhat(t):
            return np.minimum(_arr(khat0(t)), 1.0)

        def omega(x):
            return w_fast(1.0 - _arr(x))

        def Q(x):
            x = _arr(x)
            kh = _arr(khat0(1.0 - x))
            with np.errstate(all="ignore"):
                v = omega(x) * fhat(1.0 - x) / kh
            return np.where(x > 0, v, 0.0)

        ing = dict(fhat=fhat, Qfun=Q, omega=omega, omega_reflected=w_fast, khat=khat0, khat_prime=kp,
                   sigma=float("inf"), psi1=0.5 * target.g_inf)
        return ReconstructionResult("khat", "omega_reflected", "superlinear", produced, float("inf"), diag, ing, sp)

    kp_base = khat0_prime or (lambda t: numeric_derivative(khat0, _arr(t), 0.0, 1.0).reshape(_arr(t).shape))

    def omega_n(x):
        return w_fast(1.0 - _arr(x))

    ing = dict(fhat=kt, Qfun=omega_n, omega=omega_n, omega_reflected=w_fast, khat=kt,
               khat_prime=lambda t: _arr(kp_base(t)) / sigma ** 2, sigma=1.0, psi1=0.5 * tg.g_inf)
    res = ReconstructionResult("khat", "omega_reflected", "linear", produced, 1.0, diag, ing, sp)
    return rescale_sigma(res, sigma)


def khat_from_omega(target: TargetCohesiveLaw, omega0: ScalarMap, regime: str | None = None,
                    n_nodes: int = N_OUTPUT_NODES, n_table: int = 700,
                    abel_check: bool = True) -> ReconstructionResult:
    """fhat0 (linear) or khat0 (superlinear) realizing ``target`` for the prescribed omega0.

    Raises:
        CompatibilityError: 2 Psi0(1) differs from g0(inf) by more than 1e-8.
        HypothesisViolation: the target violates the hypotheses.
    """
    rep = _require_valid(target, regime)
    superlinear = target.regime == "superlinear"
    sigma = 1.0 if superlinear else target.sigma

    def w_refl(t):
        return _arr(omega0(1.0 - _arr(t)))

    w0 = float(_arr(omega0(np.array([0.0])))[0])
    if abs(w0) > 1e-12:
        raise HypothesisViolation(f"omega0(0) = {w0} must vanish")
    psi_raw = PsiTable(w_refl)
    if abs(2.0 * psi_raw.total - target.g_inf) > COMPAT_TOL * max(1.0, target.g_inf):
        raise CompatibilityError(f"2 Psi0(1) = {2 * psi_raw.total!r} but g0(inf) = {target.g_inf!r}")
    tg = target if superlinear else _normalized_target(target)
    R = build_R(tg)
    sp = build_small_phi(R)

    # scaled Psi: Psi_n = Psi0 / sigma, renormalized so that 2 Psi_n(1) = g(inf) exactly
    scale = tg.g_inf / (2.0 * psi_raw.total)

    def psi_n(x):
        return psi_raw.psi(x) * scale

    def psibar_n(x):
        return psi_raw.psibar(x) * scale

    def psi_inv_n(y):
        return psi_raw.inverse(_arr(y) / scale)

    diag = {"hypothesis_report": rep.to_dict(), "forward_roundtrip_err": None,
            "abel_roundtrip_err": _abel_err(sp) if abel_check else None,
            "two_psi0_minus_g_inf": float(2 * psi_raw.total - target.g_inf)}

    if not superlinear:
        z = np.linspace(-35.0, 35.0, n_table)
        t = 1.0 / (1.0 + np.exp(-z))
        extra = [b + (1 - b) * np.geomspace(1e-12, 0.05, 40) for b in R.breakpoints if 0 < b < 1]
        if extra:
            t = np.unique(np.concatenate([t] + extra))
        I, Ibar = I_linear(R, t)
        ok = (I > 0) & (Ibar > 0)
        t, I, Ibar = t[ok], I[ok], Ibar[ok]
        zt = np.log(t) - np.log1p(-t)
        w = np.log(I) - np.log(Ibar)
        order = np.argsort(w)
        w, zt = w[order], zt[order]
        keep = np.concatenate([[True], np.diff(w) > 0])
        tab = PchipInterpolator(w[keep], zt[keep], extrapolate=True)

        def _logit_t(x):
            """logit of t = 1 - fhat(x), where I(t) = 2 Psibar(x)."""
            x = np.clip(_arr(x), 0.0, 1.0)
            with np.errstate(divide="ignore"):
                v = np.log(psibar_n(x)) - np.log(psi_n(x))
            zz = tab(np.clip(v, tab.x[0] - 50, tab.x[-1] + 50))
            return np.where(x <= 0, np.inf, np.where(x >= 1, -np.inf, zz))

        def complement(x):
            return expit(_logit_t(x))

        def fhat(x):
            return expit(-_logit_t(x))

        def fhat_prime(x):
            # fhat' = 2 (fhat omega_n(1 - x))^(1/2) / phi(1 - fhat)
            x = _arr(x)
            with np.errstate(all="ignore"):
                v = 2.0 * np.sqrt(fhat(x) * _arr(omega0(1.0 - x)) / sigma ** 2) / sp(complement(x))
            return np.where(np.isfinite(v), v, 0.0)

        y = cosine_grid(0.0, 1.0, n_nodes)
        Iy, Iby = I_linear(R, 1.0 - y)
        finv = psi_inv_n(0.5 * Iby)  # Psi_n^{-1}(g/2 - I/2) with g/2 - I/2 = Ibar/2
        finv = np.maximum.accumulate(np.clip(finv, 0.0, 1.0))
        finv[0], finv[-1] = 0.0, 1.0
        produced = _monotone_table(y, finv)
        ing = dict(fhat=fhat, Qfun=lambda x: _arr(omega0(x)) / sigma ** 2,
                   omega=lambda x: _arr(omega0(x)) / sigma ** 2,
                   omega_reflected=lambda t: w_refl(t) / sigma ** 2, khat=fhat, khat_prime=fhat_prime,
                   sigma=1.0, psi1=0.5 * tg.g_inf, khat_complement=complement)
        res = ReconstructionResult("omega", "fhat_inverse", "linear", produced, 1.0, diag, ing, sp,
                                   _safe_inverse(produced))
        return _rescale_fixed_omega(res, sigma, omega0)

    # superlinear
    T = _super_tmax(R)
    zt = np.linspace(np.log(1e-14), np.log(T), n_table)
    t = np.exp(zt)
    J, Jbar = J_super(R, t)
    ok = (J > 0) & (Jbar > 0)
    zt, J, Jbar = zt[ok], J[ok], Jbar[ok]
    w = np.log(Jbar) - np.log(J)
    keep = np.concatenate([[True], np.diff(w) > 0])
    tab = PchipInterpolator(w[keep], zt[keep], extrapolate=True)

    def khat(x):
        x = np.clip(_arr(x), 0.0, 1.0)
        with np.errstate(divide="ignore"):
            v = np.log(psi_n(x)) - np.log(psibar_n(x))
        out = np.exp(tab(np.clip(v, tab.x[0] - 50, tab.x[-1] + 50)))
        return np.where(x <= 0, 0.0, np.where(x >= 1, np.inf, out))

    def khat_prime(x):
        x = _arr(x)
        k = khat(x)
        with np.errstate(all="ignore"):
            v = 2.0 * np.sqrt(k * w_refl(x)) / sp(k)
        return np.where(np.isfinite(v), v, np.inf)

    def fhat(x):
        return np.minimum(khat(x), 1.0)

    def Q(x):
        x = _arr(x)
        kh = khat(1.0 - x)
        with np.errstate(all="ignore"):
            v = _arr(omega0(x)) * fhat(1.0 - x) / kh
        return np.where(x > 0, v, 0.0)

    tn = np.concatenate([[0.0], np.geomspace(1e-10, T, n_nodes - 1)])
    _, Jb = J_super(R, tn)
    kinv = psi_inv_n(0.5 * Jb)
    kinv = np.maximum.accumulate(np.clip(kinv, 0.0, 1.0))
    produced = _monotone_table(tn, kinv)
    diag["phi0_times_pi"] = float(np.pi * sp.exact(0.0))
    diag["s_frac0"] = float(target.s_frac0)
    ing = dict(fhat=fhat, Qfun=Q, omega=omega0, omega_reflected=w_refl, khat=khat, khat_prime=khat_prime,
               sigma=float("inf"), psi1=0.5 * target.g_inf)
    return ReconstructionResult("omega", "khat_inverse", "superlinear", produced, float("inf"), diag, ing, sp,
                                _safe_inverse(produced))


def _monotone_table(x: np.ndarray, y: np.ndarray) -> SampledFunction:
    try:
        return SampledFunction(x, y, "increasing")
    except Exception:  # noqa: BLE001 - ties from rounding at the ends
        return SampledFunction(x, y, "none")


def _safe_inverse(sf: SampledFunction) -> Optional[SampledFunction]:
    if sf.monotone_flag == "none":
        return None
    return invert_monotone(sf)


def rescale_sigma(result: ReconstructionResult, sigma: float) -> ReconstructionResult:
    """Export a sigma = 1 reconstruction (fixed khat) for the target sigma * g:
    fhat = khat_n, omega = sigma^2 omega_n, Q = omega_n, so khat = sigma^2 khat_n."""
    if result.regime != "linear":
        raise ValueError("rescale_sigma applies to the linear regime")
    if sigma == 1.0:
        return result
    ing = dict(result.ingredients)
    s2 = sigma * sigma
    w_n, om_n, k_n, kp_n = ing["omega_reflected"], ing["omega"], ing["khat"], ing["khat_prime"]
    out = dict(
        fhat=k_n,
        Qfun=om_n,
        omega=lambda x: s2 * _arr(om_n(x)),
        omega_reflected=lambda t: s2 * _arr(w_n(t)),
        khat=lambda t: s2 * _arr(k_n(t)),
        khat_prime=lambda t: s2 * _arr(kp_n(t)),
        sigma=float(sigma),
        psi1=sigma * ing["psi1"],
    )
    if ing.get("khat_complement") is not None:
        c = ing["khat_complement"]
        out["khat_complement"] = lambda t: s2 * _arr(c(t))
    produced = result.produced
    if result.produced_kind == "omega_reflected":
        produced = SampledFunction(produced.grid, s2 * produced.values, "none")
    return replace(result, ingredients=out, sigma_scaling=float(sigma), produced=produced)


def _rescale_fixed_omega(result: ReconstructionResult, sigma: float, omega0: ScalarMap) -> ReconstructionResult:
    """Fixed omega0: fhat from the sigma = 1 problem, omega = omega0, Q = omega0 / sigma^2."""
    if sigma == 1.0:
        return result
    ing = dict(result.ingredients)
    s2 = sigma * sigma
    f, fp, c = ing["fhat"], ing["khat_prime"], ing["khat_complement"]
    out = dict(
        fhat=f,
        Qfun=lambda x: _arr(omega0(x)) / s2,
        omega=omega0,
        omega_reflected=lambda t: _arr(omega0(1.0 - _arr(t))),
        khat=lambda t: s2 * _arr(f(t)),
        khat_prime=lambda t: s2 * _arr(fp(t)),
        khat_complement=lambda t: s2 * _arr(c(t)),
        sigma=float(sigma),
        psi1=sigma * ing["psi1"],
    )
    return replace(result, ingredients=out, sigma_scaling=float(sigma))


def regularize_exponential(k: float = 1.0, delta: float = 1e-3) -> TargetCohesiveLaw:
    """Exponential softening with g' linearized past s_delta = -log(delta)/(2k)."""
    from .catalog import exponential_law
    return exponential_law(k, delta)[0]


def round_trip(target: TargetCohesiveLaw, result: ReconstructionResult, s_grid=None,
               lo_frac: float = 0.0, hi_frac: float = 1.0, threads: int = 1) -> dict:
    """Forward-evaluate the reconstructed model and compare with the target."""
    from .forward import cohesive_curve
    S = target.s_effective()
    if s_grid is None:
        s_grid = np.linspace(max(lo_frac, 1e-3) * S, hi_frac * S, 41)
    s = _arr(s_grid)
    s = s[(s > 0) & (s <= S * (1 + 1e-12))]
    model = result.to_model()
    curve = cohesive_curve(model, s, threads=threads)
    ref = _arr(target.g0(s))
    rel = np.abs(curve.g_values - ref) / np.abs(ref)
    return {
        "s_grid": s,
        "g_model": curve.g_values,
        "g_target": ref,
        "sup_rel_err": float(np.max(rel)),
        "mean_rel_err": float(np.mean(rel)),
        "two_psi1_minus_g_inf": float(model.two_psi1 - target.g_inf),
    }
