"""Brute-force check of the cohesive law by direct minimization.

The reduced functional

    G_m(w) = int_{2m-1}^1 (khat_m(t) |w'|^2 + omega_m(1-t))^(1/2) dt,
    w(2m-1) = 0,  w(1) = s,

with khat_m, omega_m the even extensions about t = m, is discretized over
piecewise-linear w on a grid clustered geometrically toward t = m.  The
discrete energy sum_i h_i (k_i d_i^2 + o_i)^(1/2) is convex in the cell
slopes d_i under the single constraint sum_i h_i d_i = s, so it is solved
either exactly through its multiplier (default) or by cyclic coordinate
descent on the node values.  Jumps appear as steep slopes in the two cells
next to t = m.  g(s) is the minimum over an m-grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import NonConvergent
from .model import PhaseFieldModel

GEOMETRIC_RATIO = 1.05
REFINE_DEPTH = 1e-4  # smallest cell / bulk cell


@dataclass(frozen=True)
class OracleConfig:
    n_w: int = 2000
    n_m: int = 200
    max_iters: int = 200_000
    conv_tol: float = 1e-9
    method: str = "duality"

    def __post_init__(self):
        if self.n_w < 64:
            raise ValueError("n_w must be at least 64")
        if self.n_m < 16:
            raise ValueError("n_m must be at least 16")
        if self.method not in ("duality", "descent"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class DiscreteProfile:
    nodes: np.ndarray  # on [2m-1, 1]
    w: np.ndarray
    energy: float
    lam: float
    sweeps: int = 0


@dataclass(frozen=True)
class OracleResult:
    value: float
    m: float
    s: float


def half_grid(m: float, n_half: int) -> np.ndarray:
    """Nodes on [m, 1]: cells grow by GEOMETRIC_RATIO away from m up to a bulk size."""
    J = min(n_half // 2, int(np.ceil(np.log(1.0 / REFINE_DEPTH) / np.log(GEOMETRIC_RATIO))))
    sizes = np.concatenate([GEOMETRIC_RATIO ** np.arange(J), np.full(n_half - J, GEOMETRIC_RATIO ** J)])
    sizes *= (1.0 - m) / sizes.sum()
    nodes = m + np.concatenate([[0.0], np.cumsum(sizes)])
    nodes[-1] = 1.0
    return nodes


def _cells(model: PhaseFieldModel, m: float, n_w: int):
    """Full symmetric grid and per-cell (h, khat, omega) at cell midpoints."""
    right = half_grid(m, n_w // 2)
    nodes = np.concatenate([2.0 * m - right[::-1], right[1:]])
    mid_r = 0.5 * (right[1:] + right[:-1])
    h_r = np.diff(right)
    k_r = np.asarray(model.khat(mid_r), dtype=float)
    o_r = np.asarray(model.omega_reflected(mid_r), dtype=float)
    h = np.concatenate([h_r[::-1], h_r])
    k = np.concatenate([k_r[::-1], k_r])
    o = np.concatenate([o_r[::-1], o_r])
    return nodes, h, k, o


def _energy(h, k, o, d) -> float:
    return float(np.sum(h * np.sqrt(k * d * d + o)))


def _solve_dual(h, k, o, s: float) -> tuple[np.ndarray, float]:
    """Cell slopes minimizing sum h sqrt(k d^2 + o) with sum h d = s.

    Stationarity gives d_i = lam o_i^(1/2) / (k_i^(1/2) (k_i - lam^2)^(1/2));
    sum h d is increasing in lam on [0, min k^(1/2)) and unbounded at the
    right end, so the multiplier is found by a bracketed root search in
    x = 1 - lam^2 / min k.
    """
    if s == 0:
        return np.zeros_like(h), 0.0
    kmin = float(np.min(k))
    dk = k - kmin

    def slopes(x):
        lam2 = kmin * (1.0 - x)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return np.sqrt(lam2 * o / (k * (dk + kmin * x)))

    def F(logx):
        return float(np.sum(h * slopes(np.exp(logx)))) - s

    lo, hi = -700.0, 0.0
    if F(lo) < 0:
        raise NonConvergent("discrete dual problem has no bracket")
    if F(hi) >= 0:
        # x = 1 means lam = 0
        return np.zeros_like(h), 0.0
    logx = brentq(F, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=500)
    x = np.exp(logx)
    d = slopes(x)
    d *= s / float(np.sum(h * d))
    return d, float(np.sqrt(kmin * (1.0 - x)))


def _solve_descent(h, k, o, s: float, cfg: OracleConfig, trace: list | None = None) -> tuple[np.ndarray, int]:
    """Cyclic coordinate descent over interior node values (red-black order),
    each coordinate minimized exactly by bisection on its derivative.
    The energy after each sweep is appended to ``trace`` when given."""
    n = h.size
    xs = np.concatenate([[0.0], np.cumsum(h)])
    w = s * xs / xs[-1]  # affine initialization
    E = _energy(h, k, o, np.diff(w) / h)
    for sweep in range(1, cfg.max_iters + 1):
        for parity in (1, 2):
            j = np.arange(parity, n, 2)
            j = j[j < n]
            wl, wr = w[j - 1], w[j + 1]
            hl, hr = h[j - 1], h[j]
            kl, kr = k[j - 1], k[j]
            ol, orr = o[j - 1], o[j]
            a = np.minimum(wl, wr)
            b = np.maximum(wl, wr)

            def dE(x):
                dl = (x - wl) / hl
                dr = (wr - x) / hr
                return kl * dl / np.sqrt(kl * dl * dl + ol) - kr * dr / np.sqrt(kr * dr * dr + orr)

            for _ in range(60):
                c = 0.5 * (a + b)
                pos = dE(c) > 0
                b = np.where(pos, c, b)
                a = np.where(pos, a, c)
            w[j] = 0.5 * (a + b)
        E_new = _energy(h, k, o, np.diff(w) / h)
        if trace is not None:
            trace.append(E_new)
        if E_new > E + 1e-12 * abs(E):
            raise NonConvergent("coordinate descent increased the energy")
        if E - E_new <= cfg.conv_tol * abs(E):
            return w, sweep
        E = E_new
    raise NonConvergent(f"coordinate descent did not converge in {cfg.max_iters} sweeps")


def discrete_profile(model: PhaseFieldModel, m: float, s: float, n_w: int = 2000,
                     cfg: OracleConfig | None = None) -> DiscreteProfile:
    """Discrete minimizer of G_{m,s} on the clustered grid."""
    if not 0.0 < m < 1.0:
        raise ValueError("m must lie in (0, 1)")
    if s < 0:
        raise ValueError("s must be nonnegative")
    cfg = cfg or OracleConfig(n_w=n_w)
    nodes, h, k, o = _cells(model, m, n_w)
    if cfg.method == "duality":
        d, lam = _solve_dual(h, k, o, s)
        w = np.concatenate([[0.0], np.cumsum(h * d)])
        w[-1] = s
        return DiscreteProfile(nodes, w, _energy(h, k, o, d), lam)
    w, sweeps = _solve_descent(h, k, o, s, cfg)
    d = np.diff(w) / h
    return DiscreteProfile(nodes, w, _energy(h, k, o, d), float("nan"), sweeps)


def discrete_Gm(model: PhaseFieldModel, m: float, s: float, n_w: int = 2000,
                cfg: OracleConfig | None = None) -> float:
    """Minimum of the discretized G_{m,s}."""
    return discrete_profile(model, m, s, n_w, cfg).energy


def _boundary_candidates(model: PhaseFieldModel, s: float, n_w: int) -> list[tuple[float, float]]:
    """(energy, m) for the limits m -> 0 and m -> 1.

    As m -> 0 the opening concentrates in a jump at t = 0, which costs
    khat(0)^(1/2) s, and the rest of [-1, 1] costs the discrete sum of
    omega_0^(1/2).  As m -> 1 the interval collapses and only the jump at
    t = 1 remains, at cost khat(1)^(1/2) s = sigma s.
    """
    _, h, k, o = _cells(model, 0.0, n_w)
    k0 = float(np.asarray(model.khat(np.array([0.0])), dtype=float)[0])
    out = [(float(np.sum(h * np.sqrt(o)) + np.sqrt(max(k0, 0.0)) * s), 0.0)]
    if np.isfinite(model.sigma):
        out.append((float(model.sigma * s), 1.0))
    return out


def discrete_g(model: PhaseFieldModel, s: float, cfg: OracleConfig | None = None) -> OracleResult:
    """min over an m-grid of discrete_Gm, a bounded refinement around the arg-min,
    and the two boundary limits m -> 0, m -> 1."""
    cfg = cfg or OracleConfig()
    m_grid = (np.arange(cfg.n_m) + 0.5) / cfg.n_m
    vals = np.array([discrete_Gm(model, float(m), s, cfg.n_w, cfg) for m in m_grid])
    i = int(np.argmin(vals))
    best_m, best = float(m_grid[i]), float(vals[i])
    lo = m_grid[max(i - 1, 0)] if i > 0 else 0.5 * m_grid[0]
    hi = m_grid[min(i + 1, cfg.n_m - 1)] if i < cfg.n_m - 1 else 0.5 * (1.0 + m_grid[-1])
    res = minimize_scalar(lambda m: discrete_Gm(model, float(m), s, cfg.n_w, cfg), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-6})
    if res.fun < best:
        best, best_m = float(res.fun), float(res.x)
    for val, m in _boundary_candidates(model, s, cfg.n_w):
        if val < best:
            best, best_m = val, m
    return OracleResult(best, best_m, float(s))


def discrete_h_sigma(phi_deg, varsigma: float, t: float, n_tau: int = 1_000_000) -> float:
    """Minimum of phi_deg(1/tau) t^2 + (varsigma^2/4) tau over a log grid on [1e-8, 1e8],
    together with the tau -> 0 boundary value phi_deg(inf) t^2."""
    if n_tau < 10_000:
        raise ValueError("n_tau must be at least 1e4")
    if varsigma == 0 or t == 0:
        return 0.0
    tau = np.geomspace(1e-8, 1e8, n_tau)
    if np.isinf(varsigma):
        return float(phi_deg(np.array([1e300]))[0]) * t * t
    vals = np.asarray(phi_deg(1.0 / tau), dtype=float) * t * t + 0.25 * varsigma * varsigma * tau
    boundary = float(phi_deg(np.array([1e300]))[0]) * t * t
    return float(min(np.min(vals), boundary))
