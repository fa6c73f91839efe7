import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special

from pfcohesive.errors import EnvelopeViolated, NoBracket, NotMonotone
from pfcohesive.numerics import (
    TIGHT_SPEC, Interval, QuadratureSpec, SampledFunction, TailEnvelope, brent_root, cosine_grid,
    integrate_adaptive, integrate_endpoint_substituted, integrate_left_sqrt_singular,
    integrate_right_sqrt_singular, integrate_tail, invert_map, invert_monotone,
    lower_convex_envelope,
)


def test_interval_rejects_reversed_bounds():
    with pytest.raises(ValueError):
        Interval(1.0, 0.0)


def test_quadrature_spec_rejects_nonpositive_tolerance():
    with pytest.raises(ValueError):
        QuadratureSpec(abs_tol=0.0)


@pytest.mark.parametrize("h, iv, expected", [
    (lambda t: np.ones_like(t), (0.0, 1.0), 1.0),
    (lambda t: np.sqrt(1.0 - t * t), (0.0, 1.0), np.pi / 4),
    (lambda t: t * t, (0.0, 2.0), 8.0 / 3.0),
])
def test_adaptive_closed_forms(h, iv, expected):
    assert integrate_adaptive(h, iv, TIGHT_SPEC) == pytest.approx(expected, abs=1e-10)


def test_left_singular_constant():
    assert integrate_left_sqrt_singular(lambda t: np.ones_like(t), (0.0, 1.0)) == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("lam", [0.1, 1.0, 3.7])
def test_left_singular_beta_identity(lam):
    # the weight sits at the lower end: int_0^lam sqrt(lam - t)/sqrt(t) dt = lam B(3/2, 1/2)
    val = integrate_left_sqrt_singular(lambda t: np.sqrt(np.maximum(lam - t, 0.0)), (0.0, lam), TIGHT_SPEC)
    assert val == pytest.approx(lam * special.beta(1.5, 0.5), rel=1e-11)


def test_left_singular_linear_softening_phi():
    tau = 0.64
    val = integrate_left_sqrt_singular(lambda t: np.full_like(t, 0.5), (0.0, tau)) / np.pi
    assert val == pytest.approx(np.sqrt(tau) / np.pi, rel=1e-12)


@pytest.mark.parametrize("h, lam, expected", [
    (lambda t: np.ones_like(t), 1.0, 2.0),
    (lambda t: np.sqrt(t) / np.pi, 0.8, 0.4),
    (lambda t: t, 1.0, 4.0 / 3.0),
])
def test_right_singular_closed_forms(h, lam, expected):
    assert integrate_right_sqrt_singular(h, (0.0, lam), TIGHT_SPEC) == pytest.approx(expected, rel=1e-11)


def test_endpoint_substituted_both_singular():
    # int_0^1 t^-1/2 (1-t)^-1/2 dt = pi
    val = integrate_endpoint_substituted(lambda t: 1.0 / np.sqrt(t * (1.0 - t)), (0.0, 1.0))
    assert val == pytest.approx(np.pi, rel=1e-11)


@pytest.mark.parametrize("h, lo, env, expected", [
    (lambda t: np.exp(-np.sqrt(t)) / (2.0 * np.sqrt(np.maximum(t, 1e-300))), 0.0, TailEnvelope("exp_sqrt", 1.0, 1.0), 1.0),
    (lambda t: np.exp(-t), 0.0, TailEnvelope("exp_sqrt", 10.0, 1.0), 1.0),
    (lambda t: t ** -2.0, 1.0, TailEnvelope("power", 1.0, 2.0), 1.0),
])
def test_tail_integrals(h, lo, env, expected):
    assert integrate_tail(h, lo, env) == pytest.approx(expected, rel=1e-9)


def test_tail_envelope_violation_detected():
    with pytest.raises(EnvelopeViolated):
        integrate_tail(lambda t: np.ones_like(t), 0.0, TailEnvelope("exp_sqrt", 1.0, 1.0))


def test_power_envelope_needs_fast_decay():
    with pytest.raises(ValueError):
        TailEnvelope("power", 1.0, 1.2)


@pytest.mark.parametrize("h, lo, hi, root", [
    (lambda x: x - 0.5, 0.0, 1.0, 0.5),
    (lambda x: x * x - 2.0, 1.0, 2.0, np.sqrt(2.0)),
    (np.cos, 1.0, 2.0, np.pi / 2),
])
def test_brent_root(h, lo, hi, root):
    assert brent_root(h, lo, hi) == pytest.approx(root, abs=1e-12)


def test_brent_root_requires_bracket():
    with pytest.raises(NoBracket):
        brent_root(lambda x: x * x + 1.0, -1.0, 1.0)


def test_invert_identity_and_square():
    ident = SampledFunction.tabulate(lambda x: x, 0.0, 1.0, 64)
    assert invert_monotone(ident)(0.37) == pytest.approx(0.37, abs=1e-12)
    sq = SampledFunction.tabulate(lambda x: x * x, 0.0, 1.0, 512)
    assert invert_monotone(sq)(0.25) == pytest.approx(0.5, abs=1e-6)


def test_invert_decreasing_linear_phi():
    phi = SampledFunction.tabulate(lambda m: 1.0 - m, 0.0, 1.0, 128)
    assert invert_monotone(phi)(0.3) == pytest.approx(0.7, abs=1e-12)


def test_invert_requires_monotone_values():
    sf = SampledFunction(np.linspace(0, 1, 8), np.sin(np.linspace(0, 6, 8)))
    with pytest.raises(NotMonotone):
        invert_monotone(sf)
    with pytest.raises(NotMonotone):
        SampledFunction(np.linspace(0, 1, 8), np.sin(np.linspace(0, 6, 8)), "increasing")


def test_envelope_of_convex_input_is_unchanged():
    x = np.linspace(-1, 2, 40)
    env = lower_convex_envelope(x, x * x)
    assert np.allclose(env.values, x * x)


def test_envelope_of_tent_is_chord():
    x = np.linspace(0, 1, 41)
    env = lower_convex_envelope(x, -np.abs(x - 0.5))
    assert np.allclose(env.values, -0.5 * np.ones_like(x))


def test_envelope_four_points():
    env = lower_convex_envelope([0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 0.1, 1.5])
    assert np.allclose(env.values, [0.0, 0.05, 0.1, 1.5])


@given(st.lists(st.floats(-10, 10), min_size=4, max_size=40))
def test_envelope_is_convex_minorant(vals):
    x = np.arange(len(vals), dtype=float)
    v = np.asarray(vals)
    env = lower_convex_envelope(x, v).values
    assert np.all(env <= v + 1e-12)
    assert np.all(np.diff(env, 2) >= -1e-9)


@given(st.floats(0.05, 20.0), st.floats(0.0, 1.0))
def test_left_singular_matches_scipy_weighted_quad(lam, a):
    # independent route: QUADPACK algebraic weight (t - a)^(-1/2)
    h = lambda t: np.exp(-a * t) * (1.0 + t)
    ref, _ = integrate.quad(lambda t: np.exp(-a * t) * (1.0 + t), 0.0, lam, weight="alg", wvar=(-0.5, 0.0),
                            epsabs=1e-13, epsrel=1e-12)
    assert integrate_left_sqrt_singular(h, (0.0, lam), TIGHT_SPEC) == pytest.approx(ref, rel=1e-10)


@given(st.floats(0.01, 0.99))
def test_invert_map_recovers_argument(x):
    F = lambda v: v ** 3 + v
    y = x ** 3 + x
    assert invert_map(F, y, 0.0, 1.0)[0] == pytest.approx(x, abs=1e-13)


def test_cosine_grid_endpoints_and_clustering():
    g = cosine_grid(2.0, 5.0, 101)
    assert g[0] == 2.0 and g[-1] == 5.0
    assert np.diff(g)[0] < np.diff(g)[50]
