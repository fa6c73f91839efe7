"""Phase-field model ingredients, target cohesive laws and hypothesis checks.

A model is described by the degradation profile ``fhat``, the map ``Qfun``,
the damage potential ``omega`` and the outer degradation ``phi_deg``.  The
forward machinery only needs

    khat(t) = omega(1 - t) * fhat(t) / Q(1 - t),   sigma^2 = khat(1-),
    Psi(t)  = int_0^t omega(1 - tau)^(1/2) dtau,

so both may be supplied directly when they are known in closed form (this
also avoids 0/0 at t = 1 when Q = omega).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .errors import HypothesisViolation, NoBracket
from .numerics import (
    TIGHT_SPEC,
    SampledFunction,
    TailEnvelope,
    brent_root,
    cosine_grid,
    integrate_adaptive,
    integrate_endpoint_substituted,
    numeric_derivative,
)

ScalarMap = Callable[[np.ndarray], np.ndarray]

SIGN_TOL = 1e-9
Q_NEIGHBOURHOOD = 0.05


def default_phi_deg(x):
    """Outer degradation x/(1+x): phi(0)=0, phi'(0+)=1, phi(inf)=1."""
    x = np.asarray(x, dtype=float)
    with np.errstate(invalid="ignore"):
        return np.where(np.isinf(x), 1.0, x / (1.0 + x))


# ---------------------------------------------------------------------------
# hypothesis reports


@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    passed: bool
    worst: float = 0.0
    location: float = float("nan")
    note: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "worst": float(self.worst),
                "location": float(self.location), "note": self.note}


@dataclass
class HypothesisReport:
    checks: list[HypothesisCheck] = field(default_factory=list)

    def add(self, name: str, passed: bool, worst: float = 0.0, location: float = float("nan"),
            note: str = "") -> None:
        if any(c.name == name for c in self.checks):
            raise ValueError(f"check {name} recorded twice")
        self.checks.append(HypothesisCheck(name, bool(passed), float(worst), float(location), note))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> HypothesisCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def names(self) -> list[str]:
        return [c.name for c in self.checks]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}

    def summary(self) -> str:
        return "; ".join(f"{c.name}={'ok' if c.passed else 'FAIL'}" for c in self.checks)


# ---------------------------------------------------------------------------
# phase-field model


@dataclass(frozen=True, eq=False)
class PhaseFieldModel:
    fhat: ScalarMap
    Qfun: ScalarMap
    omega: ScalarMap
    phi_deg: ScalarMap
    khat: ScalarMap
    khat_prime: ScalarMap
    omega_reflected: ScalarMap
    sigma: float
    psi1: float
    name: str = ""
    report: Optional[HypothesisReport] = None
    khat_complement: Optional[ScalarMap] = None  # sigma^2 - khat, for accurate differences near t = 1

    @property
    def superlinear(self) -> bool:
        return not np.isfinite(self.sigma)

    @property
    def two_psi1(self) -> float:
        return 2.0 * self.psi1

    @cached_property
    def psi_table(self) -> SampledFunction:
        """Psi on 512 boundary-clustered nodes, cumulated cell by cell."""
        grid = cosine_grid(0.0, 1.0, 512)
        h = _sqrt_omega_reflected(self)
        cells = [integrate_endpoint_substituted(h, (a, b), TIGHT_SPEC) for a, b in zip(grid[:-1], grid[1:])]
        vals = np.concatenate([[0.0], np.cumsum(cells)])
        return SampledFunction(grid, vals, "increasing")

    def psi(self, x: float) -> float:
        """Psi(x) by quadrature from the nearest tabulation node."""
        x = float(x)
        tab = self.psi_table
        if x <= 0.0:
            return 0.0
        if x >= 1.0:
            return self.psi1
        i = int(np.clip(np.searchsorted(tab.grid, x) - 1, 0, tab.grid.size - 2))
        a = tab.grid[i]
        if x == a:
            return float(tab.values[i])
        return float(tab.values[i] + integrate_endpoint_substituted(_sqrt_omega_reflected(self), (a, x), TIGHT_SPEC))

    def psi_inverse(self, y: float) -> float:
        """Psi^{-1}(y) by Newton steps (Psi' = omega^(1/2)(1-x)) safeguarded by bisection."""
        y = float(y)
        if y <= 0.0:
            return 0.0
        if y >= self.psi1:
            return 1.0
        tab = self.psi_table
        i = int(np.clip(np.searchsorted(tab.values, y) - 1, 0, tab.grid.size - 2))
        a0 = float(tab.grid[i])
        lo, hi = a0, float(tab.grid[i + 1])
        base = float(tab.values[i])
        h = _sqrt_omega_reflected(self)

        def F(x):
            if x <= a0:
                return base - y
            return base + integrate_endpoint_substituted(h, (a0, x), TIGHT_SPEC) - y

        x = float(np.clip(tab_inverse_seed(tab, y), lo, hi))
        for _ in range(60):
            fx = F(x)
            if fx == 0.0:
                return x
            if fx > 0:
                hi = x
            else:
                lo = x
            d = float(h(np.array([x]))[0])
            xn = x - fx / d if (d > 0 and np.isfinite(d)) else 0.5 * (lo + hi)
            if not lo < xn < hi:
                xn = 0.5 * (lo + hi)
            if abs(xn - x) <= 1e-15 * max(1.0, abs(x)) or hi - lo <= 1e-15:
                return xn
            x = xn
        return x


def tab_inverse_seed(tab: SampledFunction, y: float) -> float:
    return float(np.interp(y, tab.values, tab.grid))


def _sqrt_omega_reflected(model: PhaseFieldModel) -> ScalarMap:
    def h(t):
        return np.sqrt(np.maximum(model.omega_reflected(t), 0.0))
    return h


def extrapolate_sigma(khat: ScalarMap) -> float:
    """sigma from khat(1 - 2^-j), j = 8..20, with Aitken acceleration.

    Returns inf when the samples exceed 1e8 and grow, or when their
    increments fail to contract geometrically (logarithmic growth).
    """
    j = np.arange(8, 21)
    t = 1.0 - 2.0 ** (-j)
    v = np.asarray(khat(t), dtype=float)
    if not np.all(np.isfinite(v)):
        return float("inf")
    d = np.diff(v)
    if v[-1] > 1e8 and np.all(d > 0):
        return float("inf")
    if np.all(d[-4:] > 0):
        ratios = d[-3:] / d[-4:-1]
        if np.all(ratios > 0.95):
            return float("inf")
    a, b, c = v[-3:]
    den = (c - b) - (b - a)
    lim = c - (c - b) ** 2 / den if den != 0 and np.isfinite(den) else c
    if not np.isfinite(lim) or abs(lim - c) > abs(c - a) + 1e-12:
        lim = c
    return float(np.sqrt(max(lim, 0.0)))


def make_model(fhat: ScalarMap, Qfun: ScalarMap, omega: ScalarMap,
               phi_deg: ScalarMap | None = None, *, khat: ScalarMap | None = None,
               khat_prime: ScalarMap | None = None, omega_reflected: ScalarMap | None = None,
               sigma: float | None = None, psi1: float | None = None, name: str = "",
               check: bool = True, n_samples: int = 10_000,
               khat_complement: ScalarMap | None = None) -> PhaseFieldModel:
    """Build a PhaseFieldModel, derive khat, sigma and Psi(1), and validate it.

    Raises:
        HypothesisViolation: a mandatory check failed (``check=True``).
    """
    phi_deg = phi_deg or default_phi_deg

    if omega_reflected is None:
        def omega_reflected(t, _w=omega):
            return _w(1.0 - np.asarray(t, dtype=float))

    derived = khat is None
    if derived:
        def ratio(t, _f=fhat, _q=Qfun, _wr=omega_reflected):
            t = np.asarray(t, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                return _wr(t) * _f(t) / _q(1.0 - t)
        khat = ratio

    if sigma is None:
        sigma = extrapolate_sigma(khat)

    if derived:
        # omega/Q is 0/0 at t = 1; use the limit sigma^2 there
        def khat(t, _r=ratio, _s2=float(sigma) ** 2):
            t = np.asarray(t, dtype=float)
            return np.where(t >= 1.0, _s2, _r(t))

    if khat_prime is None:
        def khat_prime(t, _k=khat):
            return numeric_derivative(_k, t, 0.0, 1.0)
    if psi1 is None:
        h = lambda t: np.sqrt(np.maximum(omega_reflected(t), 0.0))  # noqa: E731
        psi1 = integrate_endpoint_substituted(h, (0.0, 1.0), TIGHT_SPEC)

    report = check_model(fhat, Qfun, omega, khat, sigma, psi1, omega_reflected, n_samples) if check else None
    model = PhaseFieldModel(fhat, Qfun, omega, phi_deg, khat, khat_prime, omega_reflected,
                            float(sigma), float(psi1), name, report, khat_complement)
    if check and not report.passed:
        raise HypothesisViolation(f"model {name or '<anonymous>'} violates: {', '.join(report.failed())}", report)
    return model


def _worst(values: np.ndarray, grid: np.ndarray, bad: np.ndarray) -> tuple[float, float]:
    if not np.any(bad):
        return 0.0, float("nan")
    i = int(np.argmax(np.where(bad, np.abs(values), -np.inf)))
    return float(np.abs(values[i])), float(grid[i])


def check_model(fhat, Qfun, omega, khat, sigma, psi1, omega_reflected,
                n_samples: int = 10_000) -> HypothesisReport:
    """Sampled checks of the model hypotheses."""
    rep = HypothesisReport()
    x = np.linspace(0.0, 1.0, n_samples + 2)[1:-1]
    with np.errstate(all="ignore"):
        f0, f1 = float(fhat(np.array([0.0]))[0]), float(fhat(np.array([1.0]))[0])
        fx = np.asarray(fhat(x), dtype=float)
        qx = np.asarray(Qfun(x), dtype=float)
        q0 = float(Qfun(np.array([0.0]))[0])
        wx = np.asarray(omega(x), dtype=float)
        w0 = float(omega(np.array([0.0]))[0])
        kx = np.asarray(khat(x), dtype=float)
        k0 = float(khat(np.array([0.0]))[0])

    err = max(abs(f0), abs(f1 - 1.0))
    rep.add("fhat_endpoints", err <= SIGN_TOL, err, 0.0 if abs(f0) > abs(f1 - 1) else 1.0,
            "fhat(0)=0 and fhat(1)=1")
    bad = ~(fx > 0) | ~np.isfinite(fx)
    rep.add("fhat_zero_only_at_origin", not bad.any(), *_worst(fx, x, bad))
    bad = ~(qx > 0) | ~np.isfinite(qx)
    rep.add("Q_zero_only_at_origin", abs(q0) <= SIGN_TOL and not bad.any(), *_worst(qx, x, bad))
    near = x <= Q_NEIGHBOURHOOD
    dq = np.diff(qx[near])
    bad_q = dq < -SIGN_TOL * max(1.0, float(np.max(np.abs(qx[near]))))
    rep.add("Q_increasing_near_origin", not bad_q.any(), *_worst(dq, x[near][1:], bad_q),
            f"checked on [0, {Q_NEIGHBOURHOOD}]")
    bad = ~(wx > 0) | ~np.isfinite(wx)
    rep.add("omega_zero_only_at_origin", abs(w0) <= SIGN_TOL and not bad.any(), *_worst(wx, x, bad))
    dk = np.diff(kx)
    scale = float(np.max(np.abs(kx[np.isfinite(kx)]))) if np.any(np.isfinite(kx)) else 1.0
    bad = ~(dk > -SIGN_TOL * max(scale, 1.0)) | ~np.isfinite(dk)
    ok = abs(k0) <= SIGN_TOL and not bad.any()
    rep.add("khat_increasing", ok, *_worst(dk, x[1:], bad), "khat(0)=0, strictly increasing")
    rep.add("sigma_positive", sigma > 0, float(sigma))
    rep.add("psi1_positive", psi1 > 0 and np.isfinite(psi1), float(psi1))
    return rep


def sigma_two_ways(model: PhaseFieldModel, fhat_at_one: float = 1.0) -> tuple[float, float]:
    """sigma^2 as khat(1-) and as fhat(1) * lim_{x->0} omega(x)/Q(x)."""
    s_khat = model.sigma ** 2
    x = 2.0 ** (-np.arange(10, 30))
    r = model.omega(x) / model.Qfun(x)
    a, b, c = r[-3:]
    den = (c - b) - (b - a)
    lim = c - (c - b) ** 2 / den if den != 0 else c
    return float(s_khat), float(fhat_at_one * lim)


# ---------------------------------------------------------------------------
# target cohesive laws


@dataclass(frozen=True, eq=False)
class TargetCohesiveLaw:
    """Prescribed cohesive law g0 with derivatives and regime metadata.

    ``kinks`` lists jump locations of g0'' (in the opening variable s);
    ``g0_prime_inv`` is an optional closed-form inverse of g0'.
    """

    g0: ScalarMap
    g0_prime: ScalarMap
    regime: str
    sigma: float
    g_inf: float
    s_frac0: float
    g0_second: Optional[ScalarMap] = None
    g0_prime_inv: Optional[ScalarMap] = None
    kinks: tuple = ()
    decay_envelope: Optional[TailEnvelope] = None
    name: str = ""

    def __post_init__(self):
        if self.regime not in ("linear", "superlinear"):
            raise ValueError(f"regime must be linear or superlinear, got {self.regime!r}")
        if self.regime == "superlinear" and self.g0_second is None:
            raise ValueError("superlinear targets need g0_second")

    def second(self, s):
        s = np.asarray(s, dtype=float)
        if self.g0_second is not None:
            return self.g0_second(s)
        hi = self.s_frac0 if np.isfinite(self.s_frac0) else max(float(np.max(s)), 1.0) * 2
        return numeric_derivative(self.g0_prime, s, 0.0, hi)

    def s_effective(self, frac: float = 0.99) -> float:
        """s_frac0 when finite, else the opening where g0 reaches frac * g_inf."""
        if np.isfinite(self.s_frac0):
            return float(self.s_frac0)
        target = frac * self.g_inf
        hi = 1.0
        while float(self.g0(np.array([hi]))[0]) < target:
            hi *= 2.0
        return brent_root(lambda s: float(self.g0(np.array([s]))[0]) - target, 0.0, hi, 1e-13)

    def prime_inverse(self, y) -> np.ndarray:
        """(g0')^{-1}(y), vectorized."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if self.g0_prime_inv is not None:
            return np.asarray(self.g0_prime_inv(y), dtype=float)
        out = np.empty_like(y)
        for i, yi in enumerate(y):
            out[i] = self._prime_inverse_scalar(float(yi))
        return out

    def _prime_inverse_scalar(self, y: float) -> float:
        gp = lambda s: float(self.g0_prime(np.array([s]))[0]) - y  # noqa: E731
        if self.regime == "linear":
            if y >= self.sigma:
                return 0.0
            lo = 0.0
        else:
            lo = self.s_effective() * 1e-16
            while gp(lo) < 0:
                lo *= 1e-8
        if np.isfinite(self.s_frac0):
            if y <= 0.0:
                return float(self.s_frac0)
            hi = float(self.s_frac0)
        else:
            hi = 1.0
            while gp(hi) > 0:
                hi *= 2.0
        return brent_root(gp, lo, hi, 1e-15 * max(1.0, hi))


def validate_target(t: TargetCohesiveLaw, n_samples: int = 10_000) -> HypothesisReport:
    """Sampled checks of the hypotheses for the declared regime.

    Both regimes: g0 is C^1, vanishes only at 0, is bounded and non-decreasing
    ("law_*").  Linear regime: g0 concave, g0'(0) = sigma finite, g0' strictly
    decreasing before s_frac0, R convex and R' in L^p for some p > 2
    ("linear_*").  Superlinear regime: g0'(0+) = inf, g0' convex, s_frac0
    finite, g0 concave ("super_*").
    """
    rep = HypothesisReport()
    S = t.s_effective()
    if t.regime == "linear":
        s = np.linspace(0.0, 1.5 * S, n_samples)
    else:
        s = S * np.geomspace(1e-10, 1.5, n_samples)
    g = np.asarray(t.g0(s), dtype=float)
    gp = np.asarray(t.g0_prime(s), dtype=float)

    g_at0 = float(t.g0(np.array([0.0]))[0])
    ok = abs(g_at0) <= SIGN_TOL and np.all(g[1:] > 0)
    rep.add("law_zero_only_at_origin", ok, abs(g_at0))
    dg = np.diff(g)
    bad = dg < -SIGN_TOL
    rep.add("law_nondecreasing", not bad.any(), *_worst(dg, s[1:], bad))
    bounded = np.isfinite(t.g_inf) and float(np.max(g)) <= t.g_inf + 1e-8
    rep.add("law_bounded", bool(bounded), float(np.max(g)) - t.g_inf)
    # C^1: g0' should have no isolated spikes in its increments
    dgp = np.abs(np.diff(gp))
    nb = np.maximum(np.concatenate([[0.0], dgp[:-1]]), np.concatenate([dgp[1:], [0.0]]))
    jump = (dgp > 1e-6) & (dgp > 20.0 * nb)
    rep.add("law_C1", not jump.any(), *_worst(dgp, s[1:], jump), "g0' continuous")

    # concavity: chord slopes non-increasing (the grid may be non-uniform)
    slopes = np.diff(g) / np.diff(s)
    d2 = np.diff(slopes)
    bad = d2 > SIGN_TOL * (1.0 + np.abs(slopes[1:]))
    concave_ok = not bad.any()

    if t.regime == "linear":
        gp0 = float(t.g0_prime(np.array([0.0]))[0])
        ok = np.isfinite(t.sigma) and 0 < t.sigma and abs(gp0 - t.sigma) <= 1e-8 * (1 + t.sigma)
        rep.add("linear_sigma", bool(ok), abs(gp0 - t.sigma), 0.0)
        rep.add("linear_concave", concave_ok, *_worst(d2, s[1:-1], bad))
        inside = s < S * (1 - 1e-9)
        dd = np.diff(gp[inside])
        bad_s = ~(dd < 0)
        rep.add("linear_slope_decreasing", not bad_s.any(), *_worst(dd, s[inside][1:], bad_s),
                "g0' strictly decreasing on [0, s_frac0)")
        if not (rep["linear_sigma"].passed and rep["linear_slope_decreasing"].passed
                and rep["law_C1"].passed):
            rep.add("linear_R_convex", False, note="skipped: earlier checks fail")
            rep.add("linear_R_integrable", False, note="skipped: earlier checks fail")
            return rep
        from .reconstruct import build_R
        R = build_R(t)
        s2 = t.sigma ** 2
        tt = np.linspace(0.0, s2 * (1 - 1e-6), 2001)
        rp = R.R_prime(tt)
        drp = np.diff(rp)
        bad = drp < -1e-7 * max(1.0, float(np.max(np.abs(rp))))
        rep.add("linear_R_convex", not bad.any(), *_worst(drp, tt[1:], bad))
        x = s2 * np.array([1e-6, 1e-8])
        r = R.R_prime(s2 - x)
        alpha = float(-np.log(r[1] / r[0]) / np.log(x[1] / x[0]))
        rep.add("linear_R_integrable", alpha < 0.45, alpha, s2,
                "R' ~ (sigma^2 - t)^-alpha near sigma^2; L^p with p>2 needs alpha < 1/2")
    else:
        small = S * 10.0 ** -np.arange(2, 15)
        gs = np.asarray(t.g0_prime(small), dtype=float)
        half = float(t.g0_prime(np.array([0.5 * S]))[0])
        ok = bool(np.all(np.diff(gs) > 0) and gs[-1] > 10 * abs(half))
        rep.add("super_infinite_initial_slope", ok, float(gs[-1]), float(small[-1]))
        inside = s <= S
        gpi = gp[inside]
        si = s[inside]
        # convexity of g0' on a non-uniform grid: slopes non-decreasing
        sl = np.diff(gpi) / np.diff(si)
        dsl = np.diff(sl)
        bad = dsl < -1e-7 * np.maximum(1.0, np.abs(sl[1:]))
        rep.add("super_prime_convex", not bad.any(), *_worst(dsl, si[1:-1], bad))
        rep.add("super_finite_sfrac", bool(np.isfinite(t.s_frac0)), float(t.s_frac0))
        g2 = float(t.second(np.array([t.s_frac0 * (1 - 1e-9)]))[0]) if np.isfinite(t.s_frac0) else 0.0
        rep.add("super_end_curvature", g2 < 0, g2, float(t.s_frac0))
        rep.add("super_concave", concave_ok, *_worst(d2, s[1:-1], bad))
    return rep
