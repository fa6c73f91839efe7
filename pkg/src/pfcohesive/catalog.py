"""Closed-form cohesive laws and matching model ingredients.

Every entry carries the target law (with g', g'' and the inverse of g'),
the auxiliary functions R' and phi where they are elementary, and the
analytic (fixed ingredient, produced ingredient) pairs.  In all analytic
models below Q = omega, so khat = fhat.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special
from scipy.interpolate import PchipInterpolator

from .errors import BadParameters, UnknownEntry
from .model import PhaseFieldModel, TargetCohesiveLaw, make_model
from .numerics import TailEnvelope

ScalarMap = Callable[[np.ndarray], np.ndarray]

NAMES = ("dugdale", "linear", "bilinear", "hyperbolic", "quad_hyperbolic", "exponential", "logarithmic")
DEFAULTS = {
    "dugdale": {"k": 1.0},
    "linear": {"k": 1.0},
    "bilinear": {"k1": 2.0, "k2": 0.5, "a": 0.25},
    "hyperbolic": {"k": 1.0},
    "quad_hyperbolic": {"k": 1.0},
    "exponential": {"k": 1.0, "delta": 1e-3},
    "logarithmic": {"k": 1.0},
}


def _arr(t) -> np.ndarray:
    return np.asarray(t, dtype=float)


@dataclass(frozen=True, eq=False)
class AnalyticModel:
    """One closed-form pair: a fixed ingredient and the ingredient it produces.

    ``fixed_kind`` is "khat" (fixed(t) = khat(t)) or "omega" (fixed(x) =
    omega(x)); ``produced_kind`` is "omega_reflected" (t -> omega(1-t)),
    "fhat_inverse" or "khat_inverse".
    """

    label: str
    fixed_kind: str
    fixed: ScalarMap
    produced_kind: str
    produced: ScalarMap
    builder: Callable[[], PhaseFieldModel] = field(repr=False)

    @cached_property
    def model(self) -> PhaseFieldModel:
        return self.builder()


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    name: str
    parameters: dict
    target: TargetCohesiveLaw
    analytic_g: ScalarMap
    analytic_g_prime: ScalarMap
    analytic_models: list
    R_prime: Optional[ScalarMap] = None
    phi: Optional[ScalarMap] = None
    notes: str = ""
    limit_g: Optional[ScalarMap] = None

    def describe(self) -> dict:
        t = self.target
        return {
            "name": self.name,
            "parameters": dict(self.parameters),
            "regime": t.regime,
            "sigma": t.sigma,
            "g_inf": t.g_inf,
            "s_frac0": t.s_frac0,
            "kinks": list(t.kinks),
            "analytic_models": [m.label for m in self.analytic_models],
            "notes": self.notes,
        }


def _params(name: str, params: dict | None) -> dict:
    if name not in DEFAULTS:
        raise UnknownEntry(f"unknown catalog entry {name!r}; known: {', '.join(NAMES)}")
    out = dict(DEFAULTS[name])
    for key, val in (params or {}).items():
        if key not in out and not (name == "bilinear" and key == "b"):
            raise BadParameters(f"{name} takes parameters {sorted(out)}, got {key!r}")
        try:
            out[key] = float(val)
        except (TypeError, ValueError):
            raise BadParameters(f"parameter {key}={val!r} is not a number") from None
    for key, val in out.items():
        if not np.isfinite(val) or val <= 0:
            raise BadParameters(f"parameter {key} must be positive and finite, got {val}")
    return out


def _khat_t2_model(name: str, omega_reflected: ScalarMap, psi1: float | None = None) -> PhaseFieldModel:
    """Model with fhat = khat = t^2 and Q = omega."""

    def omega(x):
        return omega_reflected(1.0 - _arr(x))

    return make_model(
        lambda t: _arr(t) ** 2, omega, omega,
        khat=lambda t: _arr(t) ** 2, khat_prime=lambda t: 2.0 * _arr(t),
        omega_reflected=omega_reflected, sigma=1.0, psi1=psi1, name=name,
    )


def _profile_model(name: str, omega: ScalarMap, H: ScalarMap, H_prime: ScalarMap,
                   G: ScalarMap, G_prime: ScalarMap, power: float, psi1: float) -> PhaseFieldModel:
    """Model with fhat^{-1}(y) = 1 - (1 - H(y))^(1/power) and Q = omega.

    G(e) = 1 - H(1 - e), so 1 - fhat(x) solves G(e) = (1 - x)^power; this
    stays well conditioned where fhat is flat near x = 1.
    """
    finv = _profile_inverse(H, power)
    finv_prime = _profile_inverse_prime(H, H_prime, power)
    near = _InverseMap(finv, finv_prime)
    comp_solver = _InverseMap(G, G_prime)

    def complement(x):
        return comp_solver((1.0 - np.clip(_arr(x), 0.0, 1.0)) ** power)

    def fhat(x):
        x = _arr(x)
        return np.where(x > 0.5, 1.0 - complement(x), near(x))

    def khat_prime(t):
        t = np.clip(_arr(t), 0.0, 1.0)
        e = complement(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            far = power * (1.0 - t) ** (power - 1.0) / G_prime(e)
            return np.where(t > 0.5, far, 1.0 / finv_prime(near(t)))

    return make_model(fhat, omega, omega, khat=fhat, khat_prime=khat_prime,
                      omega_reflected=lambda t: omega(1.0 - _arr(t)), sigma=1.0, psi1=psi1, name=name,
                      khat_complement=complement)


def _profile_inverse(H: ScalarMap, power: float) -> ScalarMap:
    def finv(y):
        with np.errstate(divide="ignore"):
            return -np.expm1(np.log1p(-np.minimum(H(y), 1.0)) / power)
    return finv


def _profile_inverse_prime(H: ScalarMap, H_prime: ScalarMap, power: float) -> ScalarMap:
    def finv_prime(y):
        with np.errstate(divide="ignore", invalid="ignore"):
            return (1.0 - H(y)) ** (1.0 / power - 1.0) * H_prime(y) / power
    return finv_prime


class _InverseMap:
    """Increasing inverse of a map of [0,1] onto [0,1]: log-log table seed then Newton."""

    def __init__(self, finv: ScalarMap, finv_prime: ScalarMap, n: int = 4001):
        self.finv = finv
        self.finv_prime = finv_prime
        y = np.unique(np.concatenate([np.geomspace(1e-300, 1e-3, 600),
                                      0.5 * (1.0 - np.cos(np.pi * np.linspace(0.0, 1.0, n)))[1:]]))
        x = finv(y)
        keep = (x > 0) & np.concatenate([[True], np.diff(x) > 0])
        self._seed = PchipInterpolator(np.log(x[keep]), np.log(y[keep]))

    def __call__(self, x):
        x = _arr(x)
        xc = np.clip(x, 0.0, 1.0)
        top = 1.0 - np.finfo(float).epsneg
        with np.errstate(all="ignore"):
            y = np.clip(np.exp(self._seed(np.log(np.maximum(xc, 1e-300)))), 1e-300, top)
            for _ in range(8):
                d = self.finv_prime(y)
                step = (self.finv(y) - xc) / d
                y = np.clip(y - np.where(np.isfinite(step) & (d > 0), step, 0.0), 1e-300, top)
        return np.where(xc <= 0, 0.0, np.where(xc >= 1, 1.0, y))


# ---------------------------------------------------------------------------
# Dugdale


_SERIES_N = np.arange(40)
_SERIES_C = np.exp(special.gammaln(2 * _SERIES_N + 1) - 2 * special.gammaln(_SERIES_N + 1)) / 4.0 ** _SERIES_N


def _asin_term(t):
    """asin(t^(1/2)) - (t - t^2)^(1/2) = 2 int_0^(t^(1/2)) u^2 (1-u^2)^(-1/2) du, by series for small t."""
    t = np.clip(_arr(t), 0.0, 1.0)
    small = t < 0.09
    s = np.sqrt(np.where(small, t, 0.0))
    n = _SERIES_N
    series = 2.0 * np.sum(_SERIES_C * s[..., None] ** (2 * n + 3) / (2 * n + 3), axis=-1)
    return np.where(small, series, np.arcsin(np.sqrt(t)) - np.sqrt(t - t * t))


def _q(e):
    """(2/pi)(asin e^(1/2) - (e - e^2)^(1/2)), increasing from 0 to 1."""
    return (2.0 / np.pi) * _asin_term(e)


def _q_prime(e):
    e = np.clip(_arr(e), 0.0, 1.0)
    with np.errstate(divide="ignore"):
        return (2.0 / np.pi) * np.sqrt(e / (1.0 - e))


def _Pc(e):
    """(2/pi)(asin e^(1/2) + (e - e^2)^(1/2)) = 1 - _q(1 - e), increasing from 0 to 1."""
    e = np.clip(_arr(e), 0.0, 1.0)
    return (2.0 / np.pi) * (np.arcsin(np.sqrt(e)) + np.sqrt(e - e * e))


def _Pc_prime(e):
    e = np.clip(_arr(e), 0.0, 1.0)
    with np.errstate(divide="ignore"):
        return (2.0 / np.pi) * np.sqrt((1.0 - e) / e)


def _dugdale(p: dict) -> CatalogEntry:
    k = p["k"]

    def g(s):
        return np.minimum(np.maximum(_arr(s), 0.0), k)

    def gp(s):
        return np.where(_arr(s) < k, 1.0, 0.0)

    target = TargetCohesiveLaw(g, gp, "linear", 1.0, k, k, g0_second=lambda s: np.zeros_like(_arr(s)),
                               name="dugdale")

    # fhat^{-1}(t) = 1 - [1 - (2/pi)(asin t^(1/2) - (t - t^2)^(1/2))]^(1/2) or ^(2/3)
    finv_a = _profile_inverse(_q, 2.0)
    finv_b = _profile_inverse(_q, 1.5)

    def omega_a(x):
        return k * k * _arr(x) ** 2

    def omega_b(x):
        return 9.0 * k * k / 16.0 * _arr(x)

    models = [
        AnalyticModel("omega(x)=k^2 x^2", "omega", omega_a, "fhat_inverse", finv_a,
                      lambda: _profile_model("dugdale/omega=k^2x^2", omega_a, _q, _q_prime,
                                             _Pc, _Pc_prime, 2.0, k / 2)),
        AnalyticModel("omega(x)=9k^2 x/16", "omega", omega_b, "fhat_inverse", finv_b,
                      lambda: _profile_model("dugdale/omega=9k^2x/16", omega_b, _q, _q_prime,
                                             _Pc, _Pc_prime, 1.5, k / 2)),
    ]
    return CatalogEntry("dugdale", p, target, g, gp, models,
                        notes="g = min(s, k); Phi non-decreasing, g follows min(sigma s, 2 Psi(1))")


# ---------------------------------------------------------------------------
# linear


def _linear(p: dict) -> CatalogEntry:
    k = p["k"]
    sf = 1.0 / k

    def g(s):
        s = np.clip(_arr(s), 0.0, sf)
        return s - 0.5 * k * s * s

    def gp(s):
        s = _arr(s)
        return np.where(s < sf, 1.0 - k * np.clip(s, 0.0, sf), 0.0)

    target = TargetCohesiveLaw(g, gp, "linear", 1.0, 0.5 / k, sf,
                               g0_second=lambda s: np.where(_arr(s) < sf, -k, 0.0),
                               g0_prime_inv=lambda y: (1.0 - np.clip(_arr(y), 0.0, 1.0)) / k, name="linear")

    def w_refl(t):
        t = _arr(t)
        return (1.0 - t * t) / (k * k * np.pi ** 2)

    def omega_b(x):
        return _arr(x) ** 2 / (4 * k * k)

    def omega_c(x):
        return 9.0 * _arr(x) / (64 * k * k)

    # fhat^{-1}(t) = 1 - [1 - (2/pi)((t - t^2)^(1/2) + acos((1-t)^(1/2)))]^(1/2) or ^(2/3)
    finv_b = _profile_inverse(_Pc, 2.0)
    finv_c = _profile_inverse(_Pc, 1.5)

    psi1 = 0.25 / k
    models = [
        AnalyticModel("khat(t)=t^2", "khat", lambda t: _arr(t) ** 2, "omega_reflected", w_refl,
                      lambda: _khat_t2_model("linear/khat=t^2", w_refl, psi1)),
        AnalyticModel("omega(x)=x^2/(4k^2)", "omega", omega_b, "fhat_inverse", finv_b,
                      lambda: _profile_model("linear/omega=x^2/4k^2", omega_b, _Pc, _Pc_prime,
                                             _q, _q_prime, 2.0, psi1)),
        AnalyticModel("omega(x)=9x/(64k^2)", "omega", omega_c, "fhat_inverse", finv_c,
                      lambda: _profile_model("linear/omega=9x/64k^2", omega_c, _Pc, _Pc_prime,
                                             _q, _q_prime, 1.5, psi1)),
    ]
    return CatalogEntry("linear", p, target, g, gp, models,
                        R_prime=lambda t: np.full_like(_arr(t), 0.5 / k),
                        phi=lambda tau: np.sqrt(np.maximum(_arr(tau), 0.0)) / (k * np.pi))


# ---------------------------------------------------------------------------
# bilinear


def _bilinear(p: dict) -> CatalogEntry:
    k1, k2, a = p["k1"], p["k2"], p["a"]
    if not k2 < k1:
        raise BadParameters("bilinear needs k2 < k1")
    if not k1 * a < 1.0:
        raise BadParameters("bilinear needs k1 a < 1 so that g' stays positive on [0, a]")
    c = 1.0 - k1 * a + k2 * a
    b = c / k2
    if "b" in p and abs(p["b"] - b) > 1e-12 * max(1.0, b):
        raise BadParameters(f"continuity of g' forces b = a + (1 - k1 a)/k2 = {b!r}, got {p['b']!r}")
    p = dict(p, b=b)
    ga = a - 0.5 * k1 * a * a

    def g(s):
        s = np.clip(_arr(s), 0.0, b)
        lo = s - 0.5 * k1 * s * s
        hi = ga + c * (s - a) - 0.5 * k2 * (s * s - a * a)
        return np.where(s <= a, lo, hi)

    def gp(s):
        s = _arr(s)
        return np.where(s <= a, 1.0 - k1 * s, np.maximum(c - k2 * s, 0.0))

    def gpp(s):
        s = _arr(s)
        return np.where(s <= a, -k1, np.where(s < b, -k2, 0.0))

    ya = 1.0 - k1 * a

    def gp_inv(y):
        y = np.clip(_arr(y), 0.0, 1.0)
        return np.where(y >= ya, (1.0 - y) / k1, (c - y) / k2)

    target = TargetCohesiveLaw(g, gp, "linear", 1.0, float(g(b)), b, g0_second=gpp, g0_prime_inv=gp_inv,
                               kinks=(a,), name="bilinear")
    tb = 1.0 - ya * ya

    def phi(tau):
        tau = np.maximum(_arr(tau), 0.0)
        return (np.sqrt(tau) / k1 + (1.0 / k2 - 1.0 / k1) * np.sqrt(np.maximum(tau - tb, 0.0))) / np.pi

    def w_refl(t):
        return phi(1.0 - _arr(t) ** 2) ** 2

    models = [AnalyticModel("khat(t)=t^2", "khat", lambda t: _arr(t) ** 2, "omega_reflected", w_refl,
                            lambda: _khat_t2_model("bilinear/khat=t^2", w_refl, 0.5 * float(g(b))))]
    return CatalogEntry("bilinear", p, target, g, gp, models,
                        R_prime=lambda t: np.where(_arr(t) <= tb, 0.5 / k1, 0.5 / k2), phi=phi,
                        notes=f"b = a + (1 - k1 a)/k2 = {b:.17g}; R' breaks at t = {tb:.17g}")


# ---------------------------------------------------------------------------
# hyperbolic


def _N(x):
    """x + (1-x) log(1-x), by its series sum_{n>=2} x^n/(n(n-1)) for small x."""
    x = np.clip(_arr(x), 0.0, 1.0)
    n = np.arange(2, 40)
    small = x < 0.1
    xs = np.where(small, x, 0.0)
    series = np.sum(xs[..., None] ** n / (n * (n - 1)), axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = x + np.where(x < 1.0, (1.0 - x) * np.log1p(-np.minimum(x, 1.0 - 1e-300)), 0.0)
    return np.where(small, series, direct)


def _hyperbolic(p: dict) -> CatalogEntry:
    k = p["k"]
    sf = 1.0 / k

    def g(s):
        s = np.clip(_arr(s), 0.0, sf)
        return 2.0 / k * np.log1p(k * s) - s

    def gp(s):
        s = _arr(s)
        return np.where(s < sf, 2.0 / (1.0 + k * np.clip(s, 0.0, sf)) - 1.0, 0.0)

    def gpp(s):
        s = _arr(s)
        return np.where(s < sf, -2.0 * k / (1.0 + k * np.clip(s, 0.0, sf)) ** 2, 0.0)

    def gp_inv(y):
        y = np.clip(_arr(y), 0.0, 1.0)
        return (2.0 / (1.0 + y) - 1.0) / k

    target = TargetCohesiveLaw(g, gp, "linear", 1.0, (2 * np.log(2) - 1) / k, sf, g0_second=gpp,
                               g0_prime_inv=gp_inv, name="hyperbolic")

    def phi(tau):
        tau = np.maximum(_arr(tau), 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = _N(tau) / (k * np.pi * tau ** 1.5)
        return np.where(tau > 0, out, 0.0)

    def w_refl(t):
        return phi(1.0 - _arr(t) ** 2) ** 2

    models = [AnalyticModel("khat(t)=t^2", "khat", lambda t: _arr(t) ** 2, "omega_reflected", w_refl,
                            lambda: _khat_t2_model("hyperbolic/khat=t^2", w_refl, (np.log(2) - 0.5) / k))]
    return CatalogEntry("hyperbolic", p, target, g, gp, models,
                        R_prime=lambda t: 1.0 / (k * (1.0 + np.sqrt(np.maximum(1.0 - _arr(t), 0.0))) ** 2),
                        phi=phi)


# ---------------------------------------------------------------------------
# quadratic hyperbolic


def _quad_hyperbolic(p: dict) -> CatalogEntry:
    k = p["k"]

    def g(s):
        s = np.maximum(_arr(s), 0.0)
        return s / (1.0 + k * s)

    def gp(s):
        return 1.0 / (1.0 + k * np.maximum(_arr(s), 0.0)) ** 2

    def gpp(s):
        return -2.0 * k / (1.0 + k * np.maximum(_arr(s), 0.0)) ** 3

    def gp_inv(y):
        y = np.clip(_arr(y), 0.0, 1.0)
        with np.errstate(divide="ignore"):
            return (y ** -0.5 - 1.0) / k

    target = TargetCohesiveLaw(g, gp, "linear", 1.0, 1.0 / k, float("inf"), g0_second=gpp,
                               g0_prime_inv=gp_inv, name="quad_hyperbolic")
    return CatalogEntry("quad_hyperbolic", p, target, g, gp, [],
                        R_prime=lambda t: 0.25 / k * np.maximum(1.0 - _arr(t), 0.0) ** -0.75,
                        notes="g' never vanishes (s_frac infinite); R' ~ (1-t)^(-3/4) is in L^p only for p < 4/3")


# ---------------------------------------------------------------------------
# exponential (regularized)


def exponential_law(k: float, delta: float) -> tuple[TargetCohesiveLaw, ScalarMap, ScalarMap]:
    """g_delta: g' = exp(-k s) up to s_delta = -log(delta)/(2k), then the tangent line down to zero."""
    if not 0.0 < delta < 1.0:
        raise BadParameters(f"delta must lie in (0, 1), got {delta}")
    rd = np.sqrt(delta)
    sd = -np.log(delta) / (2.0 * k)
    ss = sd + 1.0 / k
    g_inf = (1.0 - 0.5 * rd) / k

    def g(s):
        s = np.maximum(_arr(s), 0.0)
        u = np.clip(s - sd, 0.0, 1.0 / k)
        return np.where(s <= sd, -np.expm1(-k * s) / k, (1.0 - rd) / k + rd * (u - 0.5 * k * u * u))

    def gp(s):
        s = np.maximum(_arr(s), 0.0)
        return np.where(s <= sd, np.exp(-k * s), np.maximum(rd * (1.0 - k * (s - sd)), 0.0))

    def gpp(s):
        s = np.maximum(_arr(s), 0.0)
        return np.where(s <= sd, -k * np.exp(-k * s), np.where(s < ss, -k * rd, 0.0))

    def gp_inv(y):
        y = np.clip(_arr(y), 0.0, 1.0)
        with np.errstate(divide="ignore"):
            return np.where(y >= rd, -np.log(np.maximum(y, 1e-300)) / k, sd + (1.0 - y / rd) / k)

    target = TargetCohesiveLaw(g, gp, "linear", 1.0, g_inf, ss, g0_second=gpp, g0_prime_inv=gp_inv,
                               kinks=(sd,), name=f"exponential(delta={delta:g})")
    return target, g, gp


def _exponential(p: dict) -> CatalogEntry:
    k, delta = p["k"], p["delta"]
    target, g, gp = exponential_law(k, delta)
    rd = np.sqrt(delta)

    def phi(tau):
        tau = np.clip(_arr(tau), 0.0, 1.0)
        x = np.maximum(1.0 - tau, 1e-300)
        base = np.arccosh(np.sqrt(1.0 / x))
        with np.errstate(invalid="ignore"):
            extra = -np.arccosh(np.sqrt(np.maximum(delta / x, 1.0))) + np.sqrt(np.maximum((delta - x) / delta, 0.0))
        return np.where(x >= delta, base, base + extra) / (k * np.pi)

    def w_refl(t):
        t = np.clip(_arr(t), 0.0, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            outer = np.arccosh(1.0 / np.maximum(t, 1e-300))
            inner = (np.log((1.0 + np.sqrt(1.0 - t * t)) / (rd + np.sqrt(np.maximum(delta - t * t, 0.0))))
                     + np.sqrt(np.maximum(delta - t * t, 0.0) / delta))
        return np.where(t > rd, outer, inner) ** 2 / (k * np.pi) ** 2

    def R_prime(t):
        t = np.clip(_arr(t), 0.0, 1.0)
        return np.where(t <= 1.0 - delta, 0.5 / (k * np.sqrt(np.maximum(1.0 - t, delta))), 0.5 / (k * rd))

    models = [AnalyticModel("khat(t)=t^2", "khat", lambda t: _arr(t) ** 2, "omega_reflected", w_refl,
                            lambda: _khat_t2_model("exponential/khat=t^2", w_refl, 0.5 * target.g_inf))]
    return CatalogEntry("exponential", p, target, g, gp, models, R_prime=R_prime, phi=phi,
                        limit_g=lambda s: -np.expm1(-k * np.maximum(_arr(s), 0.0)) / k,
                        notes="regularized law g_delta; delta -> 0 recovers (1 - exp(-k s))/k")


# ---------------------------------------------------------------------------
# logarithmic


def log_J_bracket(u) -> np.ndarray:
    """u K0(u) + int_u^inf K0, scaled by e^u (so J = (2/(k pi)) e^-u times this)."""
    u = np.atleast_1d(_arr(u))
    out = np.empty_like(u)
    for i, ui in enumerate(u):
        tail, _ = integrate.quad(lambda x: special.k0e(ui + x) * np.exp(-x), 0.0, np.inf,
                                 epsabs=1e-15, epsrel=1e-13, limit=200)
        out[i] = (ui * special.k0e(ui) if ui > 0 else 0.0) + tail
    return out


@lru_cache(maxsize=1)
def _log_khat_table() -> PchipInterpolator:
    """u = khat^(1/2) against l = -log(1 - t); independent of k."""
    u = np.concatenate([np.linspace(0.0, 2.0, 801)[:-1], np.geomspace(2.0, 400.0, 3200)])
    ell = -(2.0 / 3.0) * (np.log(2.0 / np.pi) - u + np.log(log_J_bracket(u)))
    ell[0] = 0.0
    return PchipInterpolator(ell, u, extrapolate=True)


def log_khat(t):
    t = np.clip(_arr(t), 0.0, 1.0)
    with np.errstate(divide="ignore"):
        ell = -np.log1p(-t)
    u = _log_khat_table()(np.minimum(ell, 1e300))
    return np.where(t >= 1.0, np.inf, np.maximum(u, 0.0) ** 2)


def log_khat_prime(t):
    t = np.clip(_arr(t), 0.0, 1.0 - 1e-16)
    tab = _log_khat_table()
    ell = -np.log1p(-t)
    return 2.0 * tab(ell) * tab.derivative()(ell) / (1.0 - t)


def log_khat_inverse(t, k: float = 1.0):
    """1 - (k J(t))^(2/3) with J(t) = int_t^inf phi(x) x^(-1/2) dx."""
    u = np.sqrt(np.maximum(_arr(t), 0.0))
    kJ = (2.0 / np.pi) * np.exp(-u) * log_J_bracket(u)
    return 1.0 - kJ ** (2.0 / 3.0)


def _logarithmic(p: dict) -> CatalogEntry:
    k = p["k"]
    sf = 1.0 / k

    def g(s):
        s = np.clip(_arr(s), 0.0, sf)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = s * (1.0 - np.log(k * s))
        return np.where(s > 0, v, 0.0)

    def gp(s):
        s = np.maximum(_arr(s), 0.0)
        with np.errstate(divide="ignore"):
            return np.where(s < sf, -np.log(np.maximum(k * s, 1e-320)), 0.0)

    def gpp(s):
        s = np.maximum(_arr(s), 0.0)
        with np.errstate(divide="ignore"):
            return np.where(s < sf, -1.0 / s, 0.0)

    def gp_inv(y):
        return np.exp(-np.maximum(_arr(y), 0.0)) / k

    target = TargetCohesiveLaw(g, gp, "superlinear", float("inf"), sf, sf, g0_second=gpp, g0_prime_inv=gp_inv,
                               decay_envelope=TailEnvelope("exp_sqrt", 0.5 / k, 1.0), name="logarithmic")

    def phi(tau):
        r = np.sqrt(np.maximum(_arr(tau), 0.0))
        with np.errstate(invalid="ignore"):
            v = r * special.k1(r)
        return np.where(r > 0, v, 1.0) / (k * np.pi)

    def omega(x):
        return 9.0 * _arr(x) / (16.0 * k * k)

    def build():
        def fhat(t):
            return np.minimum(log_khat(t), 1.0)

        def Q(x):
            x = _arr(x)
            kh = log_khat(1.0 - x)
            with np.errstate(invalid="ignore", divide="ignore"):
                return np.where(x > 0, omega(x) * fhat(1.0 - x) / kh, 0.0)

        return make_model(fhat, Q, omega, khat=log_khat, khat_prime=log_khat_prime,
                          omega_reflected=lambda t: omega(1.0 - _arr(t)), sigma=float("inf"),
                          psi1=0.5 / k, name="logarithmic/omega=9x/16k^2")

    models = [AnalyticModel("omega(x)=9x/(16k^2)", "omega", omega, "khat_inverse",
                            lambda t: log_khat_inverse(t, k), build)]
    return CatalogEntry("logarithmic", p, target, g, gp, models,
                        R_prime=lambda t: -np.exp(-np.sqrt(np.maximum(_arr(t), 0.0))) / (2 * k), phi=phi,
                        notes="superlinear (sigma = inf); phi(t) = t^(1/2) K1(t^(1/2))/(k pi)")


_BUILDERS = {
    "dugdale": _dugdale,
    "linear": _linear,
    "bilinear": _bilinear,
    "hyperbolic": _hyperbolic,
    "quad_hyperbolic": _quad_hyperbolic,
    "exponential": _exponential,
    "logarithmic": _logarithmic,
}


def get(name: str, params: dict | None = None) -> CatalogEntry:
    """Catalog entry ``name`` with ``params`` overriding the defaults.

    Raises:
        UnknownEntry: ``name`` is not in the catalog.
        BadParameters: a parameter is missing, non-positive or violates a constraint.
    """
    p = _params(name, params)
    return _cached_entry(name, tuple(sorted(p.items())))


@lru_cache(maxsize=64)
def _cached_entry(name: str, items: tuple) -> CatalogEntry:
    # entries are cached so that their models' tables are built once per process
    return _BUILDERS[name](dict(items))


def list_entries() -> list[str]:
    return list(NAMES)
