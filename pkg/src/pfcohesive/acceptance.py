"""Acceptance suite: one check per criterion, each with its tolerance.

``run_suite()`` returns a list of :class:`CriterionResult`; the CLI writes it
to report.json and tests/test_acceptance.py prints one line per criterion.
"""

from __future__ import annotations

import time
import traceback
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import catalog, forward, oracle, reconstruct
from .model import default_phi_deg


@dataclass
class CriterionResult:
    id: str
    title: str
    passed: bool
    value: float
    tolerance: float
    runtime_s: float
    detail: dict = field(default_factory=dict)
    known_conflict: bool = False

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        tag = " (known conflict, see ledger)" if self.known_conflict and not self.passed else ""
        return (f"[{status}] criterion {self.id}: {self.title}: value={self.value:.3e} "
                f"tol={self.tolerance:.1e} time={self.runtime_s:.1f}s{tag}")

    def to_dict(self) -> dict:
        return asdict(self)


def _t2(t):
    return np.asarray(t, dtype=float) ** 2


def _2t(t):
    return 2.0 * np.asarray(t, dtype=float)


def _linear_model():
    return catalog.get("linear", {"k": 1.0}).analytic_models[0].model


def c1_linear_reconstruction() -> CriterionResult:
    target = catalog.get("linear", {"k": 1.0}).target
    t0 = time.perf_counter()
    res = reconstruct.omega_from_khat(target, _t2, khat0_prime=_2t, abel_check=False)
    t = np.linspace(0.0, 0.999, 2000)
    w = res.ingredients["omega_reflected"](t)
    runtime = time.perf_counter() - t0
    ref = (1.0 - t * t) / np.pi ** 2
    err = float(np.max(np.abs(w - ref)) / np.max(ref))
    ok = err <= 1e-6 and runtime <= 5.0
    return CriterionResult("1", "linear softening, khat0=t^2 -> omega", ok, err, 1e-6, runtime,
                           {"runtime_limit_s": 5.0})


def c2_forward_linear() -> CriterionResult:
    m = _linear_model()
    s = np.round(np.arange(1, 10) * 0.1, 12)
    g = np.array([forward.g_value(m, float(x)) for x in s])
    e1 = np.max(np.abs(g - (s - s * s / 2)))
    s_big = np.array([1.0, 1.5, 2.0, 5.0])
    e2 = np.max(np.abs(np.array([forward.g_value(m, float(x)) for x in s_big]) - 0.5))
    gp = np.array([forward.g_derivative(m, float(x)) for x in s])
    e3 = np.max(np.abs(gp - (1 - s)))
    err = float(max(e1, e2, e3))
    return CriterionResult("2", "forward g, g' on the linear-softening model", err <= 1e-4, err, 1e-4, 0.0,
                           {"g_err": float(e1), "plateau_err": float(e2), "gprime_err": float(e3)})


def c3_phi_linear() -> CriterionResult:
    m = _linear_model()
    ms = np.linspace(0.01, 0.99, 99)
    vals = np.array([forward.capital_phi(m, float(x)) for x in ms])
    err = float(np.max(np.abs(vals - (1 - ms))))
    return CriterionResult("3", "Phi(m) = 1 - m on the linear-softening model", err <= 1e-4, err, 1e-4, 0.0)


def c4_dugdale() -> CriterionResult:
    entry = catalog.get("dugdale", {"k": 1.0})
    s = np.linspace(0.1, 2.0, 20)
    ms = np.linspace(0.02, 0.98, 49)
    errs, detail = [], {}
    mono = True
    for am in entry.analytic_models:
        m = am.model
        g = np.array([forward.g_value(m, float(x)) for x in s])
        eg = float(np.max(np.abs(g - np.minimum(s, 1.0))))
        phis = np.array([forward.capital_phi(m, float(x)) for x in ms])
        mono_m = bool(np.all(np.diff(phis) >= -1e-9))
        ep = float(np.max(np.abs(phis - 2.0 * np.sqrt(m.fhat(ms)))))
        detail[am.label] = {"g_err": eg, "phi_err": ep, "phi_nondecreasing": mono_m}
        errs += [eg, ep]
        mono &= mono_m
    err = float(max(errs))
    return CriterionResult("4", "Dugdale: g = min(s,1), Phi non-decreasing, Phi = 2 fhat^(1/2)",
                           err <= 1e-3 and mono, err, 1e-3, 0.0, detail)


def fhat_inverse_closed_form(y):
    y = np.asarray(y, dtype=float)
    return 1.0 - np.sqrt(1.0 - (2.0 / np.pi) * (np.sqrt(y - y * y) + np.arccos(np.sqrt(1.0 - y))))


def c5_fhat_reconstruction() -> CriterionResult:
    target = catalog.get("linear", {"k": 1.0}).target
    t0 = time.perf_counter()
    res = reconstruct.khat_from_omega(target, lambda x: np.asarray(x, dtype=float) ** 2 / 4.0, abel_check=False)
    runtime = time.perf_counter() - t0
    y = np.linspace(0.001, 0.999, 2000)
    err = float(np.max(np.abs(res.produced(y) - fhat_inverse_closed_form(y))))
    return CriterionResult("5", "omega=t^2/4 -> fhat^{-1} closed form", err <= 1e-6, err, 1e-6, runtime)


ABEL_LINEAR_TARGETS = ("linear", "bilinear", "hyperbolic", "quad_hyperbolic", "exponential")


def c6_abel_round_trips() -> CriterionResult:
    detail = {}
    worst = 0.0
    for name in ABEL_LINEAR_TARGETS:
        R = reconstruct.build_R(catalog.get(name).target)
        sp = reconstruct.build_small_phi(R)
        t = np.linspace(0.0, R.domain_hi * (1 - 1e-3), 41)
        err = float(np.max(np.abs(reconstruct.abel_forward(sp, R, t) - R.R(t))))
        detail[name] = err
        worst = max(worst, err)
    R = reconstruct.build_R(catalog.get("logarithmic").target)
    sp = reconstruct.build_small_phi(R)
    t = np.linspace(0.0, 4.0, 41)
    err_log = float(np.max(np.abs(reconstruct.abel_forward(sp, R, t) - (1 + np.sqrt(t)) * np.exp(-np.sqrt(t)))))
    detail["logarithmic"] = err_log
    ok = worst <= 1e-6 and err_log <= 1e-5
    return CriterionResult("6", "Abel round trips (linear 1e-6, logarithmic 1e-5)", ok,
                           max(worst, err_log / 10.0), 1e-6, 0.0, detail)


ORACLE_LAWS = ("dugdale", "linear", "hyperbolic", "logarithmic")


def c7_oracle() -> CriterionResult:
    cfg = oracle.OracleConfig(n_w=2000, n_m=200)
    detail = {}
    worst, ok = 0.0, True
    for name in ORACLE_LAWS:
        entry = catalog.get(name)
        t0 = time.perf_counter()
        m = entry.analytic_models[0].model
        S = entry.target.s_effective()
        errs = []
        for frac in (0.2, 0.45, 0.7, 0.9):
            s = frac * S
            d = oracle.discrete_g(m, s, cfg).value
            g = forward.g_value(m, s)
            errs.append(abs(d - g) / g)
        runtime = time.perf_counter() - t0
        detail[name] = {"max_rel_err": float(max(errs)), "runtime_s": runtime}
        worst = max(worst, max(errs))
        ok &= max(errs) <= 0.02 and runtime <= 60.0
    return CriterionResult("7", "oracle vs forward (2%, <= 60 s per law)", ok, worst, 0.02, 0.0, detail)


ROUND_TRIP_TARGETS = ("bilinear", "hyperbolic", "quad_hyperbolic", "exponential")


def c8_round_trips() -> CriterionResult:
    detail = {}
    worst = 0.0
    for name in ROUND_TRIP_TARGETS:
        params = {"delta": 1e-3} if name == "exponential" else None
        target = catalog.get(name, params).target
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = reconstruct.omega_from_khat(target, _t2, khat0_prime=_2t, abel_check=False)
        S = target.s_effective()
        rt = reconstruct.round_trip(target, res, np.linspace(0.02 * S, 0.98 * S, 25))
        detail[name] = rt["sup_rel_err"]
        worst = max(worst, rt["sup_rel_err"])
    return CriterionResult("8", "reconstruct then forward round trips", worst <= 5e-3, worst, 5e-3, 0.0, detail)


def _property_models():
    for name in catalog.NAMES:
        entry = catalog.get(name)
        for am in entry.analytic_models:
            yield name, am.label, entry, am.model


def c9a_properties() -> CriterionResult:
    detail = {}
    worst = 0.0
    ok = True
    for name, label, entry, m in _property_models():
        S = entry.target.s_effective()
        s = np.linspace(0.0, 1.5 * S, 61)
        g = forward.cohesive_curve(m, s).g_values
        two_psi = m.two_psi1
        with np.errstate(invalid="ignore"):
            lin = np.where(s > 0, m.sigma * s, 0.0)
        cap = np.minimum(lin, two_psi) + 1e-8
        d = np.diff(g)
        d2 = np.diff(g, 2)
        far = forward.g_value(m, 10.0 * S)
        c = {
            "nondecreasing": float(max(0.0, -np.min(d))),
            "concave": float(max(0.0, np.max(d2))),
            "below_cap": float(max(0.0, np.max(g - cap))),
            "saturation": abs(far - two_psi),
            "two_psi1_vs_g_inf": abs(two_psi - entry.target.g_inf),
        }
        tol = {"nondecreasing": 1e-9, "concave": 1e-9, "below_cap": 0.0, "saturation": 1e-4,
               "two_psi1_vs_g_inf": 1e-8}
        good = all(c[k] <= tol[k] for k in c)
        ok &= good
        detail[f"{name}:{label}"] = c
        worst = max(worst, c["saturation"], c["two_psi1_vs_g_inf"])
    return CriterionResult("9a", "property suite on every catalog model", ok, worst, 1e-4, 0.0, detail)


def c9b_exponential_monotonicity() -> CriterionResult:
    """g_{delta2} >= g_{delta1} for delta1 < delta2, as stated; the regularized
    law actually decreases in delta (g'_delta <= g' with equality before s_delta
    and s_delta decreasing in delta), so this check is expected to fail."""
    deltas = (1e-4, 1e-3, 1e-2, 1e-1)
    s = np.linspace(0.05, 8.0, 160)
    gs = [catalog.exponential_law(1.0, d)[1](s) for d in deltas]
    viol = max(float(np.max(a - b)) for a, b in zip(gs[:-1], gs[1:]))
    return CriterionResult("9b", "exponential monotonicity g_{delta2} >= g_{delta1} (delta1 < delta2)",
                           viol <= 0.0, viol, 0.0, 0.0,
                           {"observed": "g_delta decreases as delta grows"}, known_conflict=True)


def c10_h_sigma() -> CriterionResult:
    rng = np.random.default_rng(20240611)
    pairs = np.column_stack([10.0 ** rng.uniform(-1, 1, 100), 10.0 ** rng.uniform(-2, 1, 100)])
    worst = 0.0
    for vs, t in pairs:
        a = forward.h_sigma(default_phi_deg, float(vs), float(t))
        b = oracle.discrete_h_sigma(default_phi_deg, float(vs), float(t))
        worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    grid = np.linspace(0.0, 5.0, 201)
    env_ok = True
    for vs in (0.3, 1.0, 3.0):
        env = forward.h_sigma_envelope(default_phi_deg, vs, grid)
        h = np.array([forward.h_sigma(default_phi_deg, vs, float(t)) for t in grid])
        e = env(grid)
        slopes = np.diff(e) / np.diff(grid)
        env_ok &= bool(np.all(e <= h + 1e-12) and np.all(np.diff(slopes) >= -1e-9))
    ok = worst <= 1e-6 and env_ok
    return CriterionResult("10", "h_sigma forward vs brute force; envelope convex and below", ok, worst, 1e-6, 0.0,
                           {"envelope_ok": env_ok})


CRITERIA: dict[str, Callable[[], CriterionResult]] = {
    "1": c1_linear_reconstruction,
    "2": c2_forward_linear,
    "3": c3_phi_linear,
    "4": c4_dugdale,
    "5": c5_fhat_reconstruction,
    "6": c6_abel_round_trips,
    "7": c7_oracle,
    "8": c8_round_trips,
    "9a": c9a_properties,
    "9b": c9b_exponential_monotonicity,
    "10": c10_h_sigma,
}


def run_criterion(cid: str) -> CriterionResult:
    t0 = time.perf_counter()
    try:
        res = CRITERIA[cid]()
    except Exception as exc:  # noqa: BLE001 - a crash is a failed criterion
        return CriterionResult(cid, CRITERIA[cid].__name__, False, float("nan"), float("nan"),
                               time.perf_counter() - t0,
                               {"error": repr(exc), "traceback": traceback.format_exc()})
    if res.runtime_s == 0.0:
        res.runtime_s = time.perf_counter() - t0
    return res


def run_suite(ids=None) -> list[CriterionResult]:
    return [run_criterion(c) for c in (ids or CRITERIA)]
