"""Cohesive law of a given phase-field model.

For m in (0,1) and 0 <= lam <= khat(m)^(1/2) the profile energies are

    A(m, lam) = 2 int_m^1 [(khat - lam^2) omega(1-t) / khat]^(1/2) dt
    B(m, lam) = 2 int_m^1 [lam^2 omega(1-t) / (khat (khat - lam^2))]^(1/2) dt

and Phi(m) = B(m, khat(m)^(1/2)) is the jump threshold: the optimal
profile at level m jumps exactly when s > Phi(m).  The minimal energy at
level m is A(m, lam) + lam s with lam solving B(m, lam) = s (no jump) or
lam = khat(m)^(1/2) (jump of size s - Phi(m)).  When Phi is strictly
decreasing the cohesive law is g(s) = A(m_s, khat^(1/2)(m_s)) +
khat^(1/2)(m_s) s with Phi(m_s) = s, and g'(s) = khat^(1/2)(m_s).
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, NonConvergent, OutOfRange, Unsupported, WrongRegime
from .model import PhaseFieldModel
from .numerics import (
    QuadratureSpec,
    SampledFunction,
    _adaptive,
    brent_root,
    lower_convex_envelope,
)

FORWARD_SPEC = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-10, max_subdivisions=2**11)
FALLBACK_SPECS = (
    QuadratureSpec(abs_tol=1e-11, rel_tol=1e-8, max_subdivisions=2**15),
    QuadratureSpec(abs_tol=1e-9, rel_tol=1e-6, max_subdivisions=2**15),
)
M_MIN = 1e-6
CLASS_TOL = 1e-9


# ---------------------------------------------------------------------------
# integrals over [m, 1]


def _scalar(f, x: float) -> float:
    return float(np.asarray(f(np.array([x], dtype=float)))[0])


def _khat_increment(model: PhaseFieldModel, m: float, km: float, kpm: float):
    """t, dt -> khat(t) - khat(m), linearized where cancellation would bite."""
    scale = km / kpm if kpm > 0 else 1.0
    delta = 1e-6 * min(1.0 - m, scale)

    comp = model.khat_complement
    if comp is not None and km > 0.5 * model.sigma ** 2:
        cm = _scalar(comp, m)

        def inc(t, dt):
            return np.where(dt < delta, kpm * dt, cm - comp(t))
        return inc

    def inc(t, dt):
        d = model.khat(t) - km
        return np.where(dt < delta, kpm * dt, d)

    return inc


def _integrate_from_m(m: float, F, spec: QuadratureSpec = FORWARD_SPEC) -> float:
    """int_m^1 F(t, t - m) dt with t = m + u^2 near m and t = 1 - v^2 near 1."""
    c = 0.5 * (1.0 - m)

    def left(u):
        dt = u * u
        return 2.0 * u * F(m + dt, dt)

    def right(v):
        vv = v * v
        return 2.0 * v * F(1.0 - vv, (1.0 - m) - vv)

    # rounding noise in khat(t) - khat(m) (inverted or tabulated ingredients
    # near a flat khat) can stall the tight spec: relax step by step
    for k, sp in enumerate((spec,) + FALLBACK_SPECS):
        try:
            a, _ = _adaptive(left, 0.0, np.sqrt(c), sp)
            b, _ = _adaptive(right, 0.0, np.sqrt(c), sp)
            return a + b
        except NonConvergent:
            if k == len(FALLBACK_SPECS):
                raise


def _check_m(m: float) -> None:
    if not 0.0 < m < 1.0:
        raise DomainError(f"m must lie in (0, 1), got {m}")


def _gap(model: PhaseFieldModel, m: float, lam: float) -> tuple[float, float]:
    km = _scalar(model.khat, m)
    gap = km - lam * lam
    if lam < 0 or gap < -1e-12 * max(km, 1.0):
        raise DomainError(f"lam={lam} outside [0, khat(m)^(1/2)={np.sqrt(km)}]")
    return km, max(gap, 0.0)


def _B(model: PhaseFieldModel, m: float, lam2: float, km: float, gap: float) -> float:
    if lam2 == 0.0:
        return 0.0
    kpm = _scalar(model.khat_prime, m)
    inc = _khat_increment(model, m, km, kpm)

    def F(t, dt):
        k = model.khat(t)
        return np.sqrt(lam2 * model.omega_reflected(t) / (k * (inc(t, dt) + gap)))

    return 2.0 * _integrate_from_m(m, F)


def _A(model: PhaseFieldModel, m: float, km: float, gap: float) -> float:
    kpm = _scalar(model.khat_prime, m)
    inc = _khat_increment(model, m, km, kpm)

    def F(t, dt):
        k = model.khat(t)
        return np.sqrt(np.maximum(inc(t, dt) + gap, 0.0) * model.omega_reflected(t) / k)

    return 2.0 * _integrate_from_m(m, F)


def big_B(model: PhaseFieldModel, m: float, lam: float) -> float:
    """B(m, lam); the (t-m)^(-1/2) singularity at lam = khat(m)^(1/2) is removed by t = m + u^2."""
    _check_m(m)
    km, gap = _gap(model, m, lam)
    return _B(model, m, lam * lam, km, gap)


def big_A(model: PhaseFieldModel, m: float, lam: float) -> float:
    """A(m, lam)."""
    _check_m(m)
    km, gap = _gap(model, m, lam)
    return _A(model, m, km, gap)


def dB_dlam(model: PhaseFieldModel, m: float, lam: float) -> float:
    """dB/dlam = 2 int_m^1 [khat omega(1-t) / (khat - lam^2)^3]^(1/2) dt (lam < khat(m)^(1/2))."""
    _check_m(m)
    km, gap = _gap(model, m, lam)
    if gap <= 0:
        return float("inf")
    kpm = _scalar(model.khat_prime, m)
    inc = _khat_increment(model, m, km, kpm)

    def F(t, dt):
        return np.sqrt(model.khat(t) * model.omega_reflected(t) / (inc(t, dt) + gap) ** 3)

    return 2.0 * _integrate_from_m(m, F)


def gs_direct(model: PhaseFieldModel, m: float, lam: float) -> float:
    """2 int_m^1 [khat omega(1-t) / (khat - lam^2)]^(1/2) dt, equal to A + lam B."""
    _check_m(m)
    km, gap = _gap(model, m, lam)
    kpm = _scalar(model.khat_prime, m)
    inc = _khat_increment(model, m, km, kpm)

    def F(t, dt):
        return np.sqrt(model.khat(t) * model.omega_reflected(t) / (inc(t, dt) + gap))

    return 2.0 * _integrate_from_m(m, F)


def capital_phi(model: PhaseFieldModel, m: float) -> float:
    """Phi(m) = B(m, khat(m)^(1/2))."""
    _check_m(m)
    km = _scalar(model.khat, m)
    return _B(model, m, km, km, 0.0)


# ---------------------------------------------------------------------------
# Phi table


@dataclass(frozen=True, eq=False)
class PhiTable:
    table: SampledFunction
    phi0plus: float
    phi1minus: float
    classification: str
    diagnostics: dict = field(default_factory=dict)


def _limit(values: np.ndarray) -> float:
    """Aitken limit of a sequence; inf when it grows without geometric contraction."""
    v = np.asarray(values, dtype=float)
    d = np.diff(v)
    if v[-1] > 1e8 and np.all(d > 0):
        return float("inf")
    if np.all(d[-4:] > 0) and np.all(d[-3:] / d[-4:-1] > 0.95):
        return float("inf")
    a, b, c = v[-3:]
    den = (c - b) - (b - a)
    if den == 0 or not np.isfinite(den):
        return float(c)
    lim = c - (c - b) ** 2 / den
    if not np.isfinite(lim) or abs(lim - c) > abs(c - a) + 1e-14:
        return float(c)
    return float(lim)


def classify(values: np.ndarray) -> str:
    d = np.diff(values)
    scale = max(float(np.max(np.abs(values))), 1e-300)
    if np.max(d) <= CLASS_TOL * scale and np.min(d) < 0:
        return "strictly_decreasing"
    if np.min(d) >= -CLASS_TOL * scale:
        return "non_decreasing"
    return "non_monotone"


def phi_limits(model: PhaseFieldModel) -> tuple[float, float]:
    """(Phi(0+), Phi(1-)) by direct evaluation at 2^-j offsets and extrapolation."""
    j = np.arange(8, 23)
    v0 = [capital_phi(model, 2.0 ** -k) for k in j]
    v1 = [capital_phi(model, 1.0 - 2.0 ** -k) for k in j]
    return _limit(np.array(v0)), _limit(np.array(v1))


@lru_cache(maxsize=64)
def phi_table(model: PhaseFieldModel, n_nodes: int = 512) -> PhiTable:
    """Phi on interior Chebyshev nodes, limits, and monotonicity class."""
    i = np.arange(n_nodes)
    m = 0.5 * (1.0 - np.cos(np.pi * (i + 0.5) / n_nodes))
    vals = np.array([capital_phi(model, float(x)) for x in m])
    cls = classify(vals)
    p0, p1 = phi_limits(model)
    flag = {"strictly_decreasing": "decreasing"}.get(cls, "none")
    if cls == "non_decreasing" and np.all(np.diff(vals) > 0):
        flag = "increasing"
    tab = SampledFunction(m, vals, flag)
    diag = _phi_diagnostics(model, p0)
    return PhiTable(tab, p0, p1, cls, diag)


def _phi_diagnostics(model: PhaseFieldModel, p0: float) -> dict:
    """Closed-form Phi(0+) candidates and the convexity criterion, advisory only."""
    x = 1e-7
    dsq = np.sqrt(_scalar(model.khat, 2 * x)) - np.sqrt(_scalar(model.khat, x))
    slope0 = dsq / x
    w1 = _scalar(model.omega_reflected, 0.0) if np.isfinite(_scalar(model.omega_reflected, 0.0)) else float("inf")
    printed = np.pi * np.sqrt(w1) / (2 * slope0) if slope0 > 0 else float("inf")
    corrected = 2 * printed
    # criterion: (khat o Psi^{-1})^(1/2) convex => Phi strictly decreasing
    tab = model.psi_table
    y = np.linspace(0.0, model.psi1, 401)[1:-1]
    xs = np.interp(y, tab.values, tab.grid)
    r = np.sqrt(model.khat(xs))
    d2 = r[2:] - 2 * r[1:-1] + r[:-2]
    convex = bool(np.all(d2 >= -1e-8 * max(1.0, float(np.max(np.abs(r))))))
    return {
        "phi0plus_direct": p0,
        "phi0plus_printed_formula": float(printed),
        "phi0plus_pi_formula": float(corrected),
        "sqrt_khat_psi_inverse_convex": convex,
    }


# ---------------------------------------------------------------------------
# lambda, energies, g


def solve_lambda(model: PhaseFieldModel, m: float, s: float, phi_m: float | None = None) -> float:
    """The lam in (0, khat(m)^(1/2)] with B(m, lam) = s."""
    _check_m(m)
    km = _scalar(model.khat, m)
    if phi_m is None:
        phi_m = _B(model, m, km, km, 0.0)
    if s > phi_m * (1 + 1e-13):
        raise OutOfRange(f"s={s} exceeds Phi(m)={phi_m}; the minimizer jumps")
    if s <= 0:
        return 0.0
    if s >= phi_m:
        return float(np.sqrt(km))
    # parametrize by gap = khat(m) - lam^2 so that lam -> khat(m)^(1/2) stays exact

    def resid(x):
        lam2 = km * (1.0 - x)
        return _B(model, m, lam2, km, km * x) - s

    x = brent_root(resid, 0.0, 1.0, tol=1e-14)
    return float(np.sqrt(km * (1.0 - x)))


def energy_gs(model: PhaseFieldModel, m: float, s: float) -> float:
    """Minimal energy at level m for opening s (no-jump or jump branch)."""
    _check_m(m)
    km = _scalar(model.khat, m)
    phi_m = _B(model, m, km, km, 0.0)
    if phi_m >= s:
        lam = solve_lambda(model, m, s, phi_m)
        return _A(model, m, km, max(km - lam * lam, 0.0)) + lam * s
    return _A(model, m, km, 0.0) + np.sqrt(km) * s


def _energy_at_switch(model: PhaseFieldModel, m: float, s: float) -> float:
    km = _scalar(model.khat, m)
    return _A(model, m, km, 0.0) + np.sqrt(km) * s


def m_star(model: PhaseFieldModel, s: float) -> float:
    """m_s with Phi(m_s) = s (strictly decreasing Phi); NaN outside (Phi(1-), Phi(0+))."""
    pt = phi_table(model)
    if pt.classification != "strictly_decreasing":
        raise Unsupported("m_s is defined only for strictly decreasing Phi")
    if not pt.phi1minus < s < pt.phi0plus:
        return float("nan")
    tab = pt.table
    m, v = tab.grid, tab.values
    # bracket from the table, then refine on direct evaluations
    k = int(np.searchsorted(-v, -s))
    lo = m[k - 1] if k > 0 else M_MIN
    hi = m[k] if k < m.size else 1.0 - M_MIN
    f = lambda x: capital_phi(model, x) - s  # noqa: E731
    flo, fhi = f(lo), f(hi)
    while flo < 0 and lo > M_MIN:
        lo = max(lo / 4, M_MIN)
        flo = f(lo)
    while fhi > 0 and hi < 1 - M_MIN:
        hi = min(1 - (1 - hi) / 4, 1 - M_MIN)
        fhi = f(hi)
    if flo < 0:
        return M_MIN
    if fhi > 0:
        return 1.0 - M_MIN
    return brent_root(f, lo, hi, tol=1e-14)


def g_value(model: PhaseFieldModel, s: float) -> float:
    """The cohesive law g(s)."""
    s = float(s)
    if s <= 0:
        return 0.0
    pt = phi_table(model)
    two_psi = model.two_psi1
    if pt.classification == "strictly_decreasing":
        if s <= pt.phi1minus:
            return model.sigma * s
        if s >= pt.phi0plus:
            return two_psi
        m = m_star(model, s)
        val = _energy_at_switch(model, m, s)
        return float(min(val, two_psi, model.sigma * s))
    if pt.classification == "non_decreasing":
        if not np.isfinite(model.sigma):
            raise Unsupported("non-decreasing Phi with sigma = inf is not covered")
        return float(min(model.sigma * s, two_psi))
    if not np.isfinite(model.sigma):
        raise Unsupported("non-monotone Phi with sigma = inf is not covered")
    warnings.warn("Phi is not monotone: g is computed by a best-effort scan over m", RuntimeWarning)
    return _g_scan(model, s)


def _g_scan(model: PhaseFieldModel, s: float, n: int = 1024) -> float:
    i = np.arange(n)
    ms = 0.5 * (1.0 - np.cos(np.pi * (i + 0.5) / n))
    vals = np.array([energy_gs(model, float(m), s) for m in ms])
    k = int(np.argmin(vals))
    lo, hi = ms[max(k - 1, 0)], ms[min(k + 1, n - 1)]
    res = minimize_scalar(lambda m: energy_gs(model, m, s), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    best = min(float(vals[k]), float(res.fun))
    return float(min(best, model.sigma * s, model.two_psi1))


def g_derivative(model: PhaseFieldModel, s: float) -> float:
    """g'(s) = khat(m_s)^(1/2) for strictly decreasing Phi."""
    pt = phi_table(model)
    s = float(s)
    if pt.classification == "non_decreasing" and np.isfinite(model.sigma):
        return model.sigma if s < model.two_psi1 / model.sigma else 0.0
    if pt.classification != "strictly_decreasing":
        raise Unsupported("g' formula requires strictly decreasing Phi")
    if s <= pt.phi1minus:
        return model.sigma
    if s >= pt.phi0plus:
        return 0.0
    return float(np.sqrt(_scalar(model.khat, m_star(model, s))))


@dataclass(frozen=True, eq=False)
class CohesiveCurve:
    s_grid: np.ndarray
    g_values: np.ndarray
    g_prime_values: np.ndarray
    m_star_values: np.ndarray
    s_frac: float
    two_psi1: float


def _curve_point(model: PhaseFieldModel, s: float) -> tuple[float, float, float]:
    pt = phi_table(model)
    g = g_value(model, s)
    try:
        gp = g_derivative(model, s)
    except Unsupported:
        gp = float("nan")
    ms = float("nan")
    if pt.classification == "strictly_decreasing" and pt.phi1minus < s < pt.phi0plus:
        ms = m_star(model, s)
    return g, gp, ms


def cohesive_curve(model: PhaseFieldModel, s_grid, threads: int = 1) -> CohesiveCurve:
    """g, g' and m_s on a grid of openings; results do not depend on ``threads``."""
    s_grid = np.asarray(s_grid, dtype=float)
    pt = phi_table(model)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(lambda s: _curve_point(model, float(s)), s_grid))
    else:
        rows = [_curve_point(model, float(s)) for s in s_grid]
    arr = np.array(rows, dtype=float).reshape(-1, 3)
    if pt.classification == "strictly_decreasing":
        s_frac = pt.phi0plus
    elif np.isfinite(model.sigma):
        s_frac = model.two_psi1 / model.sigma
    else:
        s_frac = float("nan")
    return CohesiveCurve(s_grid, arr[:, 0], arr[:, 1], arr[:, 2], s_frac, model.two_psi1)


# ---------------------------------------------------------------------------
# optimal profiles


@dataclass(frozen=True, eq=False)
class OptimalProfile:
    """Minimizer at level m: samples on [m, 1] (w(m+) first), odd symmetric about m."""

    m: float
    s: float
    lam: float
    regularity: str
    t_samples: np.ndarray
    w_samples: np.ndarray
    jump: float

    def full(self) -> tuple[np.ndarray, np.ndarray]:
        """(t, w) on [2m-1, 1]; the left half is s - w(2m - t)."""
        r = self.t_samples - self.m
        tl = (self.m - r[::-1])
        wl = self.s - self.w_samples[::-1]
        if self.jump == 0.0:
            tl, wl = tl[:-1], wl[:-1]
        return np.concatenate([tl, self.t_samples]), np.concatenate([wl, self.w_samples])


def optimal_profile(model: PhaseFieldModel, m: float, s: float, n_samples: int = 200) -> OptimalProfile:
    """w' = [lam^2 omega(1-t) / (khat (khat - lam^2))]^(1/2) integrated on [m, 1]."""
    _check_m(m)
    km = _scalar(model.khat, m)
    phi_m = _B(model, m, km, km, 0.0)
    if s > phi_m:
        lam, gap, jump, reg = np.sqrt(km), 0.0, s - phi_m, "SBV_jump"
        w0 = s - 0.5 * phi_m
    else:
        lam = solve_lambda(model, m, s, phi_m)
        gap, jump, reg = max(km - lam * lam, 0.0), 0.0, "W11"
        w0 = 0.5 * s
    lam2 = lam * lam
    kpm = _scalar(model.khat_prime, m)
    inc = _khat_increment(model, m, km, kpm)

    def F(t, dt):
        return np.sqrt(lam2 * model.omega_reflected(t) / (model.khat(t) * (inc(t, dt) + gap)))

    # nodes uniform in u = (t-m)^(1/2): the slope behaves like (t-m)^(-1/2)
    u = np.linspace(0.0, np.sqrt(1.0 - m), n_samples)
    t = m + u * u
    t[-1] = 1.0
    cells = []
    for a, b in zip(u[:-1], u[1:]):
        g = lambda x: 2.0 * x * F(m + x * x, x * x)  # noqa: E731
        cells.append(_adaptive(g, a, b, FORWARD_SPEC)[0])
    cum = np.concatenate([[0.0], np.cumsum(cells)])
    if cum[-1] > 0:
        # remove quadrature drift so that w(1) = s holds exactly
        cum *= (s - w0) / cum[-1]
    w = w0 + cum
    return OptimalProfile(float(m), float(s), float(lam), reg, t, w, float(jump))


# ---------------------------------------------------------------------------
# superlinear upper bound


def g_hat(model: PhaseFieldModel, s: float) -> float:
    """inf over x in (0,1] of 2(Psi(1) - Psi(1-x)) + khat(1-x)^(1/2) s."""
    if np.isfinite(model.sigma):
        raise WrongRegime("g_hat is defined for superlinear models (sigma = inf)")
    s = float(s)
    if s <= 0:
        return 0.0
    tab = model.psi_table
    x = np.geomspace(1e-12, 1.0, 600)
    y = 1.0 - x
    with np.errstate(all="ignore"):
        vals = 2.0 * (model.psi1 - tab(y)) + np.sqrt(model.khat(y)) * s
    vals = np.where(np.isfinite(vals), vals, np.inf)
    k = int(np.argmin(vals))

    def E(logx):
        xx = float(np.exp(logx))
        yy = 1.0 - xx
        return 2.0 * (model.psi1 - model.psi(yy)) + np.sqrt(_scalar(model.khat, yy)) * s

    lo, hi = np.log(x[max(k - 1, 0)]), np.log(x[min(k + 1, x.size - 1)])
    res = minimize_scalar(E, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    return float(min(res.fun, E(np.log(x[k])), 2.0 * model.psi1))


# ---------------------------------------------------------------------------
# diffuse density


def _phi_at_infinity(phi_deg) -> float:
    v = float(np.asarray(phi_deg(np.array([np.inf])))[0])
    if np.isfinite(v):
        return v
    return float(np.asarray(phi_deg(np.array([1e300])))[0])


def h_sigma(phi_deg, varsigma: float, t: float) -> float:
    """inf over tau > 0 of phi_deg(1/tau) t^2 + (varsigma^2/4) tau."""
    t = float(t)
    if varsigma == 0:
        return 0.0
    phi_inf = _phi_at_infinity(phi_deg)
    if np.isinf(varsigma):
        return phi_inf * t * t
    if t == 0:
        return 0.0
    c = 0.25 * varsigma * varsigma

    def f(logtau):
        tau = np.exp(logtau)
        return phi_deg(1.0 / tau) * t * t + c * tau

    z = np.linspace(np.log(1e-14), np.log(1e14), 4001)
    vals = f(z)
    k = int(np.argmin(vals))
    best = float(vals[k])
    if 0 < k < z.size - 1:
        res = minimize_scalar(lambda q: float(f(np.array([q]))[0]), bounds=(z[k - 1], z[k + 1]),
                              method="bounded", options={"xatol": 1e-12})
        best = min(best, float(res.fun))
    # tau -> 0 limit
    return float(min(best, phi_inf * t * t))


def h_sigma_envelope(phi_deg, varsigma: float, t_grid) -> SampledFunction:
    """Lower convex envelope of h_varsigma on ``t_grid``."""
    t_grid = np.asarray(t_grid, dtype=float)
    vals = np.array([h_sigma(phi_deg, varsigma, float(t)) for t in t_grid])
    return lower_convex_envelope(t_grid, vals)
