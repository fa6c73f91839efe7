import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special

from pfcohesive import catalog, forward, reconstruct
from pfcohesive.errors import CompatibilityError, HypothesisViolation, NotInvertible
from pfcohesive.reconstruct import RFunction

from conftest import t2, two_t


def _a(x):
    return np.asarray(x, dtype=float)


@pytest.fixture(scope="module")
def R_linear():
    return reconstruct.build_R(catalog.get("linear").target)


@pytest.fixture(scope="module")
def R_hyperbolic():
    return reconstruct.build_R(catalog.get("hyperbolic").target)


@pytest.fixture(scope="module")
def R_log():
    return reconstruct.build_R(catalog.get("logarithmic").target)


@pytest.fixture(scope="module")
def hyperbolic_result():
    return reconstruct.omega_from_khat(catalog.get("hyperbolic").target, t2, khat0_prime=two_t)


def test_R_linear(R_linear):
    t = np.linspace(0, 1, 11)
    assert R_linear.regime == "linear"
    assert np.allclose(R_linear.R(t), t / 2, atol=1e-14)
    assert np.allclose(R_linear.R_prime(t[:-1]), 0.5, atol=1e-12)


def test_R_bilinear_breakpoint():
    e = catalog.get("bilinear")
    k1, k2, a = e.parameters["k1"], e.parameters["k2"], e.parameters["a"]
    R = reconstruct.build_R(e.target)
    tb = 1 - (1 - k1 * a) ** 2
    assert any(abs(b - tb) < 1e-12 for b in R.breakpoints)
    assert float(R.R_prime(np.array([tb - 1e-6]))[0]) == pytest.approx(0.5 / k1, rel=1e-9)
    assert float(R.R_prime(np.array([tb + 1e-6]))[0]) == pytest.approx(0.5 / k2, rel=1e-9)


def test_R_logarithmic(R_log):
    t = np.array([0.0, 0.25, 1.0, 9.0])
    assert R_log.regime == "superlinear"
    assert np.allclose(R_log.R(t), (1 + np.sqrt(t)) * np.exp(-np.sqrt(t)), atol=1e-12)


def test_dugdale_rejected_with_guidance():
    with pytest.raises((NotInvertible, HypothesisViolation)) as exc:
        reconstruct.omega_from_khat(catalog.get("dugdale").target, t2)
    assert "dugdale" in str(exc.value).lower()


def test_phi_of_constant_slope(R_linear):
    tau = np.array([0.0, 0.1, 0.5, 0.99])
    assert np.allclose(reconstruct.abel_invert_linear(R_linear, tau), np.sqrt(tau) / np.pi, atol=1e-14)


def test_phi_of_zero_slope(R_linear):
    zero = RFunction("linear", lambda t: np.zeros_like(_a(t)), lambda t: np.zeros_like(_a(t)), 1.0, 0.0, 1.0,
                     (), R_linear.envelope, lambda d: np.zeros_like(_a(d)))
    assert np.all(reconstruct.abel_invert_linear(zero, np.array([0.2, 0.7])) == 0.0)


def test_phi_hyperbolic_value(R_hyperbolic):
    tau = 0.75
    ref = ((1 - tau) * np.log(1 - tau) + tau) / (np.pi * tau ** 1.5)
    assert float(reconstruct.abel_invert_linear(R_hyperbolic, np.array([tau]))[0]) == pytest.approx(ref, rel=1e-10)


def test_gap_form_matches_direct(R_hyperbolic):
    gap = np.array([1e-3, 0.1, 0.5])
    assert np.allclose(reconstruct.abel_invert_linear_gap(R_hyperbolic, gap),
                       reconstruct.abel_invert_linear(R_hyperbolic, 1 - gap), rtol=1e-11)


def test_superlinear_phi(R_log):
    tau = np.array([0.0, 0.5, 2.0, 8.0, 30.0])
    phi = reconstruct.abel_invert_super(R_log, tau)
    assert phi[0] == pytest.approx(1 / np.pi, rel=1e-10)
    assert np.all(np.diff(phi) < 0)
    r = np.sqrt(tau[1:])
    assert np.allclose(phi[1:], r * special.k1(r) / np.pi, rtol=1e-9)


def test_forward_abel_of_superlinear_phi(R_log):
    sp = reconstruct.build_small_phi(R_log)
    assert float(reconstruct.abel_forward(sp, R_log, np.array([1.0]))[0]) == pytest.approx(2 / np.e, abs=1e-6)


def test_small_phi_table_matches_exact(R_hyperbolic):
    sp = reconstruct.build_small_phi(R_hyperbolic)
    tau = np.linspace(0.01, 0.99, 37)
    assert np.allclose(sp(tau), sp.exact(tau), rtol=1e-7)


def test_I_against_nested_quadrature(R_hyperbolic):
    phi = catalog.get("hyperbolic").phi
    for t in (0.2, 0.6, 0.95):
        ref, _ = integrate.quad(lambda x: float(phi(np.array([x]))[0]) / np.sqrt(1 - x), 0.0, t,
                                epsabs=1e-14, epsrel=1e-12)
        I, Ibar = reconstruct.I_linear(R_hyperbolic, t)
        assert I[0] == pytest.approx(ref, rel=1e-9)


def test_I_closed_form_linear(R_linear):
    t = np.array([0.1, 0.5, 0.9])
    I, Ibar = reconstruct.I_linear(R_linear, t)
    assert np.allclose(I, (np.arcsin(np.sqrt(t)) - np.sqrt(t * (1 - t))) / np.pi, rtol=1e-11)
    assert np.allclose(I + Ibar, 0.5, atol=1e-13)


@given(st.floats(0.0, 1.0))
def test_I_complement_sums_to_total(t):
    R = reconstruct.build_R(catalog.get("bilinear").target)
    I, Ibar = reconstruct.I_linear(R, t)
    assert I[0] + Ibar[0] == pytest.approx(catalog.get("bilinear").target.g_inf, abs=1e-12)
    assert I[0] >= 0 and Ibar[0] >= 0


def test_J_against_nested_quadrature(R_log):
    for t in (0.0, 1.0, 6.0):
        u0 = np.sqrt(t)
        # int_t^inf phi(x) x^(-1/2) dx with phi = sqrt(x) K1(sqrt(x))/pi is (2/pi) int_u0^inf u K1(u) du
        ref, _ = integrate.quad(lambda u: u * special.k1(u), u0, np.inf, epsabs=1e-15, epsrel=1e-12)
        J, Jbar = reconstruct.J_super(R_log, t)
        assert J[0] == pytest.approx(2 * ref / np.pi, rel=1e-9)
        assert J[0] + Jbar[0] == pytest.approx(1.0, abs=1e-11)


def test_linear_reconstruction(linear_entry):
    res = reconstruct.omega_from_khat(linear_entry.target, t2, khat0_prime=two_t)
    t = np.linspace(0, 0.999, 200)
    assert np.allclose(res.ingredients["omega_reflected"](t), (1 - t * t) / np.pi ** 2, atol=1e-9)
    assert res.produced_kind == "omega_reflected"


def test_hyperbolic_reconstruction(hyperbolic_result):
    t = np.linspace(0.02, 0.98, 49)
    ref = (2 * t * t * np.log(t) + 1 - t * t) ** 2 / (np.pi ** 2 * (1 - t * t) ** 3)
    assert np.allclose(hyperbolic_result.ingredients["omega_reflected"](t), ref, rtol=1e-7)


def test_reconstructed_model_properties(hyperbolic_result):
    m = hyperbolic_result.to_model(check=True)
    assert m.two_psi1 == pytest.approx(2 * np.log(2) - 1, abs=1e-8)
    assert forward.phi_table(m, n_nodes=128).classification == "strictly_decreasing"
    t = np.linspace(0, 1, 101)
    assert np.all(hyperbolic_result.ingredients["omega_reflected"](t) >= 0)


def test_bilinear_reconstruction_at_branch():
    e = catalog.get("bilinear")
    res = reconstruct.omega_from_khat(e.target, t2, khat0_prime=two_t)
    k1, a = e.parameters["k1"], e.parameters["a"]
    t = np.array([1 - k1 * a - 1e-3, 1 - k1 * a, 1 - k1 * a + 1e-3, 0.3, 0.9])
    assert np.allclose(res.ingredients["omega_reflected"](t), e.analytic_models[0].produced(t), rtol=1e-7)


def test_unsupplied_khat_derivative_is_numeric(linear_entry):
    res = reconstruct.omega_from_khat(linear_entry.target, lambda t: _a(t) ** 3)
    t = np.array([0.2, 0.5, 0.8])
    # omega(1-t) = [(t^(3/2))' phi(1 - t^3)]^2 with phi = sqrt/pi
    ref = (1.5 * np.sqrt(t) * np.sqrt(1 - t ** 3) / np.pi) ** 2
    assert np.allclose(res.ingredients["omega_reflected"](t), ref, rtol=1e-6)


def test_incompatible_omega_rejected(linear_entry):
    with pytest.raises(CompatibilityError):
        reconstruct.khat_from_omega(linear_entry.target, lambda x: _a(x) ** 2)


@pytest.fixture(scope="module")
def log_from_omega(logarithmic_entry):
    return reconstruct.khat_from_omega(logarithmic_entry.target, lambda x: 9 * _a(x) / 16)


def test_logarithmic_khat_inverse(log_from_omega, logarithmic_entry):
    t = np.array([0.01, 0.5, 2.0, 10.0])
    ref = logarithmic_entry.analytic_models[0].produced(t)
    assert log_from_omega.produced_kind == "khat_inverse"
    assert np.allclose(log_from_omega.produced(t), ref, rtol=1e-5)


def test_rescale_identity(hyperbolic_result):
    same = reconstruct.rescale_sigma(hyperbolic_result, 1.0)
    t = np.linspace(0.05, 0.95, 7)
    assert np.allclose(same.ingredients["omega_reflected"](t), hyperbolic_result.ingredients["omega_reflected"](t))


def test_scaled_linear_law():
    # sigma * g with sigma = 2 on the linear law
    lin = catalog.get("linear").target
    target = reconstruct.replace(lin, g0=lambda s: 2 * lin.g0(s), g0_prime=lambda s: 2 * lin.g0_prime(s),
                                 g0_second=lambda s: 2 * lin.g0_second(s),
                                 g0_prime_inv=lambda y: lin.g0_prime_inv(_a(y) / 2), sigma=2.0, g_inf=1.0)
    res = reconstruct.omega_from_khat(target, lambda t: 4 * _a(t) ** 2, khat0_prime=lambda t: 8 * _a(t))
    m = res.to_model()
    assert m.sigma == pytest.approx(2.0, rel=1e-9)
    assert m.two_psi1 == pytest.approx(1.0, abs=1e-9)
    assert forward.g_derivative(m, 0.0) == pytest.approx(2.0, rel=1e-6)
    assert forward.g_value(m, 0.5) == pytest.approx(2 * 0.375, abs=1e-8)


def test_regularize_exponential():
    t = reconstruct.regularize_exponential(1.0, 1e-3)
    assert t.regime == "linear"
    assert validate_ok(t)
    s = np.array([0.5, 2.0])
    assert np.allclose(t.g0(s), -np.expm1(-s), atol=1e-15)


def validate_ok(t):
    from pfcohesive.model import validate_target
    return validate_target(t).passed


def test_round_trip_linear(linear_entry):
    res = reconstruct.omega_from_khat(linear_entry.target, t2, khat0_prime=two_t)
    rt = reconstruct.round_trip(linear_entry.target, res, np.linspace(0.05, 0.95, 10))
    assert rt["sup_rel_err"] <= 5e-4
    assert rt["two_psi1_minus_g_inf"] == pytest.approx(0.0, abs=1e-9)


def test_quad_hyperbolic_warns_and_starts_off_zero():
    target = catalog.get("quad_hyperbolic").target
    with pytest.warns(RuntimeWarning):
        res = reconstruct.omega_from_khat(target, t2, khat0_prime=two_t, abel_check=False)
    assert res.produced.lo > 0
    assert "note" in res.diagnostics
