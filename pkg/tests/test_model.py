import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from magrod.errors import NegativeRadicand, SingularState, ZeroScale
from magrod.melnikov import bracket, complex_step_gradient
from magrod.model import (
    SYMPLECTIC,
    Params,
    PhysicalParams,
    State,
    first_integral,
    first_integral_array,
    first_integral_dimensional,
    hamiltonian,
    hamiltonian_array,
    hamiltonian_dimensional,
    jacobian,
    nondimensionalize,
    vector_field,
    vector_field_array,
)


def _symbolic():
    th, ps, pt, pp = sp.symbols("theta psi p_theta p_psi", real=True)
    a, mu, nu, eps, g = sp.symbols("alpha mu nu eps gamma", real=True)
    rad = mu - 2 * nu * pp
    H = (pt**2 / 2 + ((pp - sp.cos(th)) / sp.sin(th)) ** 2 / 2
         + a * sp.cos(th) * (1 + g / 2 * sp.cos(th))
         + (1 + g * sp.cos(th)) * sp.sin(th) * sp.cos(ps) * sp.sqrt(rad)
         + g / (2 * a) * sp.sin(th) ** 2 * sp.cos(ps) ** 2 * rad
         - eps * pp)
    F = (pp + nu / a * sp.cos(th)
         - sp.sqrt(rad) / a * (pt * sp.sin(ps) - sp.cos(ps) * (1 - pp * sp.cos(th)) / sp.sin(th)))
    x = (th, ps, pt, pp)
    field = [sp.diff(H, pt), sp.diff(H, pp), -sp.diff(H, th), -sp.diff(H, ps)]
    args = (*x, a, mu, nu, eps, g)
    return (sp.lambdify(args, H, "math"), sp.lambdify(args, F, "math"),
            sp.lambdify(args, field, "math"))


SYM_H, SYM_F, SYM_FIELD = _symbolic()


def _args(s, p):
    return (*s, p.alpha, p.mu, p.nu, p.eps, p.gamma)


states = st.tuples(
    st.floats(0.2, 2.9), st.floats(-math.pi, math.pi), st.floats(-2, 2), st.floats(-1.5, 1.5)
)
params = st.builds(
    lambda a, mu, nu, eps, g: Params(a, mu, nu, eps, g),
    st.floats(0.3, 3), st.floats(0.05, 0.3), st.floats(0, 0.01), st.floats(-0.1, 0.1), st.floats(-0.2, 0.2),
)


def test_vector_field_reference_state():
    # at theta = pi/2 the restoring torque is -alpha sin(theta); the field is minus dH/dtheta
    f = vector_field(State(math.pi / 2, 0.0, 0.3, 1.0), Params(alpha=0.5))
    assert np.allclose(f, [0.3, 1.0, -0.5, 0.0], atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(states, params)
def test_energy_integral_field_match_symbolic(s, p):
    assert hamiltonian(s, p) == pytest.approx(SYM_H(*_args(s, p)), rel=1e-12, abs=1e-12)
    assert first_integral(s, p) == pytest.approx(SYM_F(*_args(s, p)), rel=1e-11, abs=1e-11)
    np.testing.assert_allclose(vector_field(s, p), SYM_FIELD(*_args(s, p)), rtol=1e-10, atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(states, params)
def test_field_is_symplectic_gradient(s, p):
    grad = complex_step_gradient(lambda x: hamiltonian_array(x, p), np.array(s))
    np.testing.assert_allclose(vector_field(s, p), SYMPLECTIC @ grad, rtol=1e-11, atol=1e-11)


@settings(max_examples=100, deadline=None)
@given(states, params)
def test_first_integral_in_involution_without_extensibility(s, p):
    p = p.with_(eps=0.0, gamma=0.0)
    x = np.array(s)
    gH = complex_step_gradient(lambda y: hamiltonian_array(y, p), x)
    gF = complex_step_gradient(lambda y: first_integral_array(y, p), x)
    assert abs(bracket(gF, gH)) < 1e-10 * (1 + np.abs(gF).max() * np.abs(gH).max())


def test_first_integral_breaks_with_extensibility():
    p = Params(0.5, 0.1, 0.01, 0.01, 0.02)
    x = np.array([1.0, 0.4, 0.2, 0.7])
    gH = complex_step_gradient(lambda y: hamiltonian_array(y, p), x)
    gF = complex_step_gradient(lambda y: first_integral_array(y, p), x)
    assert abs(bracket(gF, gH)) > 1e-3


def test_jacobian_matches_complex_step(rng):
    p = Params(0.7, 0.1, 0.01, 0.02, 0.05)
    for _ in range(20):
        s = np.array([rng.uniform(0.3, 2.8), rng.uniform(-3, 3), rng.uniform(-1, 1), rng.uniform(-1, 1)])
        exact = np.empty((4, 4))
        for k in range(4):
            xc = s.astype(complex)
            xc[k] += 1e-20j
            exact[:, k] = vector_field_array(xc, p).imag / 1e-20
        np.testing.assert_allclose(jacobian(s, p), exact, atol=1e-8 * (1 + np.abs(exact).max()))


def test_pole_raises():
    p = Params(0.5, 0.1)
    for fn in (hamiltonian, first_integral, vector_field):
        with pytest.raises(SingularState):
            fn((0.0, 0.0, 0.0, 1.0), p)
        with pytest.raises(SingularState):
            fn((math.pi, 0.0, 0.0, 1.0), p)
    with pytest.raises(SingularState):
        jacobian((1e-7, 0.0, 0.0, 1.0), p)


def test_negative_radicand():
    p = Params(0.5, 0.01, 0.01)
    with pytest.raises(NegativeRadicand):
        hamiltonian((1.0, 0.0, 0.0, 1.0), p)
    with pytest.raises(NegativeRadicand):
        vector_field((1.0, 0.0, 0.0, 0.5), p)  # radicand exactly zero with nu > 0
    # no magnetic coupling at all: the zero radicand is allowed
    assert np.isfinite(vector_field((1.0, 0.0, 0.0, 0.5), Params(0.5)).all())


def test_params_validation():
    with pytest.raises(ValueError):
        Params(0.5, mu=-1e-3)
    with pytest.raises(ValueError):
        Params(0.5, eps=0.1, gamma=0.3, gamma_hat=1.0)
    p = Params.scaled(0.5, 0.1, 0.01, 0.02, gamma_hat=2.0)
    assert p.gamma == pytest.approx(0.04)
    assert p.unperturbed().eps == 0 and p.unperturbed().gamma == 0
    assert p.with_(eps=0.1).gamma_hat is None


def test_pole_ratio_is_accurate_in_tails():
    # (p_psi - cos) / sin with p_psi = 1 at tiny theta equals tan(theta/2)
    theta = 1e-9
    p = Params(0.5)
    H = hamiltonian((theta, 0.0, 0.0, 1.0), p)
    assert H == pytest.approx(0.5 * math.tan(theta / 2) ** 2 + 0.5 * math.cos(theta), rel=1e-15)


physical = st.builds(
    PhysicalParams,
    B=st.floats(0.5, 3), J=st.floats(0.5, 3), K=st.floats(0.5, 3), lam=st.floats(0, 0.05),
    C1=st.floats(1.0, 3), C2=st.floats(0.5, 1.2), p_phi=st.floats(0.8, 2),
)


@settings(max_examples=100, deadline=None)
@given(physical, st.floats(0.3, 2.8), st.floats(-3, 3), st.floats(-1, 1), st.floats(-1, 1))
def test_nondimensionalisation_scales_energy_and_integral(ph, theta, psi, pt, pp):
    sc = nondimensionalize(ph)
    p = sc.params
    s = sc.state_to_dimensionless(theta, psi, pt, pp)
    if p.mu - 2 * p.nu * s.p_psi <= 0:
        return
    H = hamiltonian_dimensional(theta, psi, pt, pp, ph)
    assert hamiltonian(s, p) == pytest.approx(H / sc.energy_scale, rel=1e-10, abs=1e-10)
    F = first_integral_dimensional(theta, psi, pt, pp, ph)
    assert first_integral(s, p) == pytest.approx(F / (ph.C2 * ph.p_phi), rel=1e-10, abs=1e-10)
    back = sc.state_to_dimensional(s)
    assert back.p_psi == pytest.approx(pp)


def test_nondimensional_groups():
    ph = PhysicalParams(B=2.0, J=1.5, K=3.0, lam=0.02, C1=1.3, C2=0.9, p_phi=1.1)
    p = nondimensionalize(ph).params
    assert p.alpha == pytest.approx(2.0 * 0.9 / 1.1**2)
    assert p.mu == pytest.approx(4.0 * (2.6 - 0.81) / 1.1**4)
    assert p.nu == pytest.approx(0.02 * 4.0 / 1.1**3)
    assert p.eps == pytest.approx(0.02 * 2.0 / (1.5 * 1.1))
    assert p.gamma == pytest.approx(0.9 * (1 / 3.0 - 1 / 1.5))


def test_zero_twist_has_no_scaling():
    with pytest.raises(ZeroScale):
        PhysicalParams(1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0)
