import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pfcohesive import catalog, forward, reconstruct
from pfcohesive.errors import BadParameters, UnknownEntry


def _a(x):
    return np.asarray(x, dtype=float)


def test_listing_and_description():
    assert catalog.list_entries() == list(catalog.NAMES)
    for name in catalog.NAMES:
        d = catalog.get(name).describe()
        json.dumps(d)
        assert d["name"] == name


def test_unknown_entry():
    with pytest.raises(UnknownEntry):
        catalog.get("trilinear")


@pytest.mark.parametrize("name, params", [
    ("linear", {"k": -1.0}),
    ("linear", {"q": 1.0}),
    ("linear", {"k": "abc"}),
    ("bilinear", {"k1": 0.5, "k2": 2.0, "a": 0.25}),
    ("bilinear", {"k1": 2.0, "k2": 0.5, "a": 0.6}),
    ("bilinear", {"k1": 2.0, "k2": 0.5, "a": 0.25, "b": 1.0}),
    ("exponential", {"k": 1.0, "delta": 1.5}),
])
def test_bad_parameters(name, params):
    with pytest.raises(BadParameters):
        catalog.get(name, params)


def test_bilinear_consistent_b_accepted():
    e = catalog.get("bilinear", {"k1": 2.0, "k2": 0.5, "a": 0.25, "b": 1.25})
    assert e.parameters["b"] == pytest.approx(1.25)


def test_entries_are_cached():
    assert catalog.get("linear", {"k": 1}) is catalog.get("linear")


def test_dugdale_law_and_pair():
    e = catalog.get("dugdale", {"k": 1.0})
    s = np.array([0.0, 0.3, 1.0, 2.5])
    assert np.allclose(e.analytic_g(s), np.minimum(s, 1.0))
    pair = e.analytic_models[0]
    t = np.linspace(0, 1, 11)
    assert np.allclose(pair.model.omega_reflected(t), (1 - t) ** 2)
    finv = pair.produced
    assert float(finv(np.array([0.0]))[0]) == pytest.approx(0.0, abs=1e-12)
    assert float(finv(np.array([1.0]))[0]) == pytest.approx(1.0, abs=1e-12)
    y = np.array([0.1, 0.5, 0.9])
    ref = 1 - np.sqrt(1 - (2 / np.pi) * (np.arcsin(np.sqrt(y)) - np.sqrt(y - y * y)))
    assert np.allclose(finv(y), ref, atol=1e-13)
    # fhat and its tabulated inverse agree
    assert np.allclose(pair.model.fhat(finv(y)), y, atol=1e-9)


def test_hyperbolic_law():
    e = catalog.get("hyperbolic", {"k": 1.0})
    s = np.array([0.0, 0.25, 0.5, 1.0, 3.0])
    assert np.allclose(e.analytic_g(s), 2 * np.log1p(np.minimum(s, 1)) - np.minimum(s, 1))
    assert e.target.g_inf == pytest.approx(2 * np.log(2) - 1)


def test_linear_k2_law():
    e = catalog.get("linear", {"k": 2.0})
    s = np.array([0.1, 0.3, 0.5, 0.8])
    assert np.allclose(e.analytic_g(s), np.where(s < 0.5, s - s * s, 0.25))
    assert e.target.s_frac0 == 0.5 and e.target.g_inf == 0.25


@given(st.floats(0.2, 5.0), st.floats(0.0, 3.0))
def test_linear_scaling_in_k(k, s):
    g1 = catalog.get("linear", {"k": 1.0}).analytic_g
    gk = catalog.get("linear", {"k": k}).analytic_g
    assert float(gk(s)) == pytest.approx(float(g1(k * s)) / k, rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("name", ["linear", "bilinear", "hyperbolic", "quad_hyperbolic", "exponential"])
def test_closed_form_R_prime_matches_inversion(name):
    e = catalog.get(name)
    R = reconstruct.build_R(e.target)
    t = np.linspace(0.0, 0.99, 23)
    assert np.allclose(R.R_prime(t), e.R_prime(t), rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("name", ["linear", "bilinear", "hyperbolic", "exponential"])
def test_closed_form_phi_matches_abel_inversion(name):
    e = catalog.get(name)
    R = reconstruct.build_R(e.target)
    tau = np.array([0.05, 0.3, 0.6, 0.75, 0.95])
    assert np.allclose(reconstruct.abel_invert_linear(R, tau), e.phi(tau), rtol=1e-9, atol=1e-12)


def test_hyperbolic_phi_value():
    tau = 0.75
    ref = ((1 - tau) * np.log(1 - tau) + tau) / (np.pi * tau ** 1.5)
    assert float(catalog.get("hyperbolic").phi(np.array([tau]))[0]) == pytest.approx(ref, rel=1e-14)
    assert ref == pytest.approx(0.19771, abs=5e-6)


def test_hyperbolic_small_argument_series():
    phi = catalog.get("hyperbolic").phi
    tau = np.array([1e-9, 1e-4, 0.09, 0.11])
    # N(x)/x^(3/2) ~ x^(1/2)/2 as x -> 0
    assert float(phi(tau[:1])[0]) == pytest.approx(np.sqrt(1e-9) / (2 * np.pi), rel=1e-8)
    direct = (tau[2:] + (1 - tau[2:]) * np.log1p(-tau[2:])) / (np.pi * tau[2:] ** 1.5)
    assert np.allclose(phi(tau[2:]), direct, rtol=1e-12)


@pytest.mark.parametrize("name", ["linear", "bilinear", "hyperbolic"])
def test_khat_t2_pairs_reproduce_the_law(name):
    e = catalog.get(name)
    m = e.analytic_models[0].model
    s = np.linspace(0.05, 0.95, 5) * e.target.s_frac0
    g = np.array([forward.g_value(m, float(x)) for x in s])
    assert np.allclose(g, e.analytic_g(s), atol=1e-8)


def test_bilinear_omega_continuous_at_branch():
    e = catalog.get("bilinear")
    k1, a = e.parameters["k1"], e.parameters["a"]
    t = 1 - k1 * a
    w = e.analytic_models[0].produced
    at = float(w(np.array([t]))[0])
    assert at == pytest.approx((1 - t * t) / (k1 * np.pi) ** 2, rel=1e-14)
    # square-root cusp at the branch: the one-sided gaps shrink like eps^(1/2)
    gaps = [abs(float(w(np.array([t - eps]))[0]) - at) for eps in (1e-6, 1e-10, 1e-14)]
    assert gaps[0] > 50 * gaps[1] > 2500 * gaps[2]
    assert gaps[2] < 1e-7


def test_exponential_branches():
    k, delta = 1.0, 1e-3
    e = catalog.get("exponential", {"k": k, "delta": delta})
    w = e.analytic_models[0].produced
    rd = np.sqrt(delta)
    assert float(w(np.array([rd * (1 - 1e-12)]))[0]) == pytest.approx(float(w(np.array([rd * (1 + 1e-12)]))[0]),
                                                                       abs=1e-10)
    t = np.array([0.05, 0.3, 0.9])
    assert np.allclose(w(t), np.arccosh(1 / t) ** 2 / (k * np.pi) ** 2, rtol=1e-13)


def test_exponential_regularization_converges_from_below():
    s = np.linspace(0.0, 12.0, 121)
    limit = -np.expm1(-s)
    gaps = []
    for delta in (1e-1, 1e-2, 1e-3, 1e-4):
        g = catalog.get("exponential", {"k": 1.0, "delta": delta}).analytic_g(s)
        assert np.all(g <= limit + 1e-15)
        gaps.append(float(np.max(limit - g)))
    assert gaps == sorted(gaps, reverse=True)
    assert gaps[-1] < np.sqrt(1e-4)


def test_logarithmic_entry():
    e = catalog.get("logarithmic")
    assert e.target.regime == "superlinear"
    assert float(e.phi(np.array([0.0]))[0]) == pytest.approx(1 / np.pi)
    finv = e.analytic_models[0].produced
    assert float(finv(np.array([0.0]))[0]) == pytest.approx(0.0, abs=1e-12)
    big = finv(np.array([10.0, 100.0, 400.0]))
    assert np.all(np.diff(big) > 0) and 1 - big[-1] < 1e-5
    m = e.analytic_models[0].model
    t = np.array([0.5, 2.0, 10.0])
    assert np.allclose(m.khat(finv(t)), t, rtol=1e-8)


def test_quad_hyperbolic_has_no_pair():
    e = catalog.get("quad_hyperbolic")
    assert e.analytic_models == []
    assert not np.isfinite(e.target.s_frac0)
