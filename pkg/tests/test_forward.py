import numpy as np
import pytest
from hypothesis import given, strategies as st

from pfcohesive import catalog, forward
from pfcohesive.errors import WrongRegime
from pfcohesive.model import default_phi_deg, make_model
from pfcohesive.oracle import discrete_h_sigma

from conftest import t2


@pytest.fixture(scope="module")
def log_model(logarithmic_entry):
    return logarithmic_entry.analytic_models[0].model


def test_B_vanishes_with_lambda(linear_model):
    assert forward.big_B(linear_model, 0.3, 1e-9) == pytest.approx(0.0, abs=1e-8)


@pytest.mark.parametrize("m", [0.1, 0.3, 0.5, 0.9])
def test_B_at_switch_linear(linear_model, m):
    assert forward.big_B(linear_model, m, m) == pytest.approx(1.0 - m, abs=1e-12)
    assert forward.capital_phi(linear_model, m) == pytest.approx(1.0 - m, abs=1e-12)


@pytest.mark.parametrize("x", [0.2, 0.4, 0.8])
def test_B_at_switch_dugdale(dugdale_model, x):
    lam = np.sqrt(float(dugdale_model.khat(np.array([x]))[0]))
    expected = 2.0 * np.sqrt(float(dugdale_model.fhat(np.array([x]))[0]))
    assert forward.big_B(dugdale_model, x, lam) == pytest.approx(expected, rel=1e-10)


def test_A_limits(linear_model):
    assert forward.big_A(linear_model, 1.0 - 1e-9, 0.0) == pytest.approx(0.0, abs=1e-10)
    assert forward.big_A(linear_model, 1e-9, 0.0) == pytest.approx(2.0 * linear_model.psi1, abs=1e-8)


def test_A_is_energy_minus_multiplier_term(linear_model):
    a = forward.big_A(linear_model, 0.5, 0.5)
    assert a == pytest.approx(forward.energy_gs(linear_model, 0.5, 0.5) - 0.25, abs=1e-12)


def test_phi_table_linear(linear_model):
    pt = forward.phi_table(linear_model)
    assert pt.classification == "strictly_decreasing"
    assert pt.phi0plus == pytest.approx(1.0, abs=1e-9)
    assert pt.phi1minus == pytest.approx(0.0, abs=1e-9)


def test_phi_nondecreasing_dugdale(dugdale_model):
    m = np.linspace(0.05, 0.95, 10)
    phi = np.array([forward.capital_phi(dugdale_model, x) for x in m])
    assert np.all(np.diff(phi) >= -1e-12)
    assert np.allclose(phi, 2.0 * np.sqrt(dugdale_model.fhat(m)), rtol=1e-10)


@pytest.mark.parametrize("alpha", [2.0, 3.0])
def test_power_khat_gives_decreasing_phi(alpha):
    f = lambda t: np.asarray(t, dtype=float) ** alpha
    w = lambda x: np.asarray(x, dtype=float)
    m = make_model(f, w, w)
    assert forward.phi_table(m, n_nodes=128).classification == "strictly_decreasing"


def test_solve_lambda(linear_model):
    lam = forward.solve_lambda(linear_model, 0.5, 0.3)
    assert forward.big_B(linear_model, 0.5, lam) == pytest.approx(0.3, abs=1e-10)
    assert forward.solve_lambda(linear_model, 0.5, 0.5) == pytest.approx(0.5, abs=1e-12)
    assert forward.solve_lambda(linear_model, 0.5, 1e-10) < 1e-8


def test_energy_at_optimal_level(linear_model):
    assert forward.m_star(linear_model, 0.5) == pytest.approx(0.5, abs=1e-9)
    assert forward.energy_gs(linear_model, 0.5, 0.5) == pytest.approx(0.375, abs=1e-12)


def test_energy_beyond_switch_includes_jump(linear_model):
    # for s > Phi(m) the extra opening s - Phi(m) is paid at the slope khat(m)^(1/2)
    m, s = 0.5, 0.8
    base = forward.energy_gs(linear_model, m, 0.5)
    assert forward.energy_gs(linear_model, m, s) == pytest.approx(base + 0.5 * (s - 0.5), abs=1e-12)


def test_dugdale_g(dugdale_model):
    assert forward.g_value(dugdale_model, 0.4) == pytest.approx(0.4, abs=1e-9)
    assert forward.g_value(dugdale_model, 2.0) == pytest.approx(1.0, abs=1e-9)


def test_linear_g(linear_model):
    assert forward.g_value(linear_model, 0.6) == pytest.approx(0.42, abs=1e-10)
    assert forward.g_value(linear_model, 1.5) == pytest.approx(0.5, abs=1e-12)
    assert forward.g_derivative(linear_model, 0.3) == pytest.approx(0.7, abs=1e-9)
    assert forward.g_derivative(linear_model, 0.0) == pytest.approx(1.0, abs=1e-9)
    assert forward.g_derivative(linear_model, 1.2) == 0.0


def test_logarithmic_g(log_model):
    assert forward.g_value(log_model, 1.0) == pytest.approx(1.0, abs=1e-8)
    assert forward.g_value(log_model, 0.2) == pytest.approx(0.2 * (1.0 - np.log(0.2)), abs=1e-8)


@given(st.floats(0.0, 0.999))
def test_linear_g_is_closed_form(s):
    m = catalog.get("linear").analytic_models[0].model
    assert forward.g_value(m, s) == pytest.approx(s - s * s / 2, abs=1e-9)


def test_cohesive_curve_concave_and_monotone(linear_model):
    s = np.linspace(0, 1.2, 25)
    c = forward.cohesive_curve(linear_model, s)
    assert np.all(np.diff(c.g_values) >= -1e-12)
    assert np.all(np.diff(c.g_values, 2) <= 1e-9)
    assert c.two_psi1 == pytest.approx(0.5)
    assert np.allclose(c.g_prime_values, np.maximum(1 - s, 0), atol=1e-8)


def test_cohesive_curve_threads_agree(linear_model):
    s = np.linspace(0, 1, 9)
    a = forward.cohesive_curve(linear_model, s, threads=1)
    b = forward.cohesive_curve(linear_model, s, threads=3)
    assert np.array_equal(a.g_values, b.g_values)


def test_profile_at_switch(linear_model):
    p = forward.optimal_profile(linear_model, 0.5, 0.5)
    assert p.jump == 0.0
    assert p.regularity == "W11"
    assert p.w_samples[0] == pytest.approx(0.25, abs=1e-12)


def test_profile_with_jump(linear_model):
    p = forward.optimal_profile(linear_model, 0.5, 0.7)
    assert p.regularity == "SBV_jump"
    assert p.jump == pytest.approx(0.2, abs=1e-12)
    assert p.lam == pytest.approx(0.5, abs=1e-12)


@given(st.floats(0.1, 0.9), st.floats(0.05, 1.5))
def test_profile_invariants(m, s):
    model = catalog.get("linear").analytic_models[0].model
    p = forward.optimal_profile(model, m, s, n_samples=60)
    t, w = p.full()
    assert w[0] == pytest.approx(0.0, abs=1e-9) and w[-1] == pytest.approx(s, abs=1e-9)
    assert np.all(np.diff(w) >= -1e-12)
    # odd symmetry about (m, s/2)
    assert np.allclose(w[::-1], s - w, atol=1e-9)
    assert p.jump == pytest.approx(max(0.0, s - (1.0 - m)), abs=1e-9)
    assert 0.0 < p.lam <= m + 1e-12


def test_g_hat_requires_superlinear(linear_model):
    with pytest.raises(WrongRegime):
        forward.g_hat(linear_model, 0.5)


def test_g_hat_limits(log_model):
    assert forward.g_hat(log_model, 0.0) == 0.0
    assert forward.g_hat(log_model, 100.0) == pytest.approx(log_model.two_psi1, rel=1e-9)
    ratios = [forward.g_hat(log_model, s) / s for s in (1e-2, 1e-4, 1e-6)]
    assert ratios[0] < ratios[1] < ratios[2]


def test_h_sigma_edges():
    assert forward.h_sigma(default_phi_deg, 0.0, 1.0) == 0.0
    assert forward.h_sigma(default_phi_deg, np.inf, 2.0) == pytest.approx(4.0)


def test_h_sigma_against_grid_search():
    assert forward.h_sigma(default_phi_deg, 1.0, 1.0) == pytest.approx(
        discrete_h_sigma(default_phi_deg, 1.0, 1.0), rel=1e-8)


def test_h_sigma_envelope_is_convex():
    env = forward.h_sigma_envelope(default_phi_deg, 0.7, np.linspace(0, 3, 31))
    assert np.all(np.diff(env.values, 2) >= -1e-12)
