import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magrod.analytic import HomoclinicFamily, melnikov_leading
from magrod.errors import RegimeViolation
from magrod.melnikov import (
    MelnikovProblem,
    complex_step_gradient,
    find_simple_zeros,
    melnikov,
    rod_h0,
    rod_h1,
    rod_melnikov_grid,
    rod_problem,
    simplified_integrand,
)
from magrod.model import Params, hamiltonian_array
from magrod.numerics import QuadratureConfig


def _pendulum_problem(grad_H1, grad_K=None):
    # x = (q, phi, p, I): pendulum in (q, p) times a free rotor (phi, I); K = I
    def H0(x):
        return 0.5 * x[2] ** 2 + np.cos(x[0]) - 1.0 + x[3]

    def family(t, kappa):
        t = np.asarray(t, dtype=float)
        q = 4 * np.arctan(np.exp(t)) - math.pi
        p = 2 / np.cosh(t)
        return np.array([q, t + kappa, p, np.zeros_like(t)])

    return MelnikovProblem(
        grad_H0=lambda x: complex_step_gradient(H0, x),
        grad_H1=grad_H1(H0),
        grad_K=grad_K or (lambda x: complex_step_gradient(lambda y: y[3], x)),
        family=family,
        kappa_domain=(0.0, 2 * math.pi),
        periodic=True,
        decay_rate=1.0,
    )


def test_perturbation_along_flow_directions_gives_zero():
    prob = _pendulum_problem(lambda H0: (lambda x: complex_step_gradient(H0, x)))
    prob.validate()
    assert abs(melnikov(prob, 0.7, QuadratureConfig(40.0))) < 1e-13
    prob = _pendulum_problem(lambda H0: (lambda x: complex_step_gradient(lambda y: y[3], x)))
    assert abs(melnikov(prob, 0.7, QuadratureConfig(40.0))) < 1e-13


def test_sine_forcing_has_simple_zeros_at_zero_and_pi():
    # H1 = cos(phi) (1 + cos q) / 2 gives M(kappa) = -pi sin(kappa) / sinh(pi / 2)
    prob = _pendulum_problem(lambda H0: (lambda x: complex_step_gradient(
        lambda y: 0.5 * np.cos(y[1]) * (1 + np.cos(y[0])), x)))
    amp = math.pi / math.sinh(math.pi / 2)
    assert abs(melnikov(prob, 1.0, QuadratureConfig(40.0))) == pytest.approx(amp * math.sin(1.0), rel=1e-12)
    res = find_simple_zeros(prob, grid_size=32)
    kappas = sorted(z.kappa for z in res.zeros)
    assert len(kappas) == 2
    assert kappas[0] == pytest.approx(0.0, abs=1e-9)
    assert kappas[1] == pytest.approx(math.pi, abs=1e-9)
    assert all(z.simple for z in res.zeros)
    z0, z1 = sorted(res.zeros, key=lambda z: z.kappa)
    assert abs(z0.slope) == pytest.approx(amp, rel=1e-6)
    assert z1.slope == pytest.approx(-z0.slope, rel=1e-6)


def test_double_zero_is_not_simple():
    prob = MelnikovProblem(None, None, None, None, (0.0, 2 * math.pi))
    res = find_simple_zeros(prob, grid_size=40, fn=lambda k: math.sin(k - 1.0) ** 2)
    assert res.zeros and not any(z.simple for z in res.zeros)
    assert min(abs(z.kappa - 1.0) for z in res.zeros) < 1e-4


def test_rod_zeros_at_symmetric_phases():
    p = Params(0.5, 1e-3, 1e-4)
    res = find_simple_zeros(rod_problem(p), grid_size=32)
    kappas = sorted(z.kappa for z in res.zeros if z.simple)
    assert len(kappas) == 2
    assert kappas[0] == pytest.approx(0.0, abs=1e-8)
    assert kappas[1] == pytest.approx(math.pi, abs=1e-8)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.3, 3.0), st.floats(1e-4, 0.1), st.floats(0, 2 * math.pi))
def test_rod_melnikov_odd_in_phase_and_branch(alpha, mu, psi0):
    p = Params(alpha, mu, mu / 10)
    prob = rod_problem(p)
    q = QuadratureConfig(40 / HomoclinicFamily(alpha).delta)
    m = melnikov(prob, psi0, q)
    assert melnikov(prob, -psi0, q) == pytest.approx(-m, abs=1e-12)
    assert melnikov(rod_problem(p, branch=-1), psi0, q) == pytest.approx(-m, abs=1e-12)


@pytest.mark.parametrize("psi0", [0.3, 1.0, 2.5])
def test_simplified_integrand_matches_bracket(psi0):
    p = Params(0.5, 0.05, 0.005)
    prob = rod_problem(p)
    t = np.linspace(-20, 20, 201)
    np.testing.assert_allclose(prob.integrand(psi0)(t), simplified_integrand(0.5, 0.05, 0.005, psi0)(t),
                               atol=1e-13)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.4, 2.8), st.floats(-3, 3), st.floats(-1, 1), st.floats(0.5, 1.5), st.floats(-0.05, 0.05))
def test_splitting_reproduces_full_hamiltonian(theta, psi, pt, pp, eps):
    p = Params.scaled(0.7, 0.1, 0.01, eps, gamma_hat=1.5)
    x = np.array([theta, psi, pt, pp])
    full = hamiltonian_array(x, p)
    split = rod_h0(x, 0.7, 0.1, 0.01) + eps * rod_h1(x, 0.7, 0.1, 0.01, 1.5)
    assert split == pytest.approx(full, abs=1e-12)


def test_extensibility_changes_melnikov_only_at_higher_order():
    # the gamma-hat terms contribute O(mu) relative to the sqrt(mu) leading part
    p = Params(0.5, 1e-3, 1e-4)
    g, m0, _ = rod_melnikov_grid(p, 16, gamma_hat=0.0)
    _, m1, _ = rod_melnikov_grid(p, 16, gamma_hat=1.0)
    assert np.max(np.abs(m1 - m0)) < 10 * p.mu * np.max(np.abs(m0))


def test_no_extensibility_matches_leading_formula_to_quadrature_accuracy():
    p = Params(0.5, 1e-3, 1e-4)
    g, m, err = rod_melnikov_grid(p, 32, gamma_hat=0.0)
    lead = melnikov_leading(g, 0.5, 1e-3, 1e-4)
    assert np.all(np.abs(m - lead) <= np.maximum(err, 1e-15) + 1e-15)


def test_regime_guards():
    for p in (Params(0.25, 0.1), Params(0.5, 0.25), Params(0.5, 0.1, 0.03)):
        with pytest.raises(RegimeViolation):
            rod_problem(p)


def test_deviation_shrinks_like_sqrt_mu():
    devs = []
    for mu in (1e-2, 1e-3, 1e-4):
        p = Params(0.5, mu, mu / 10)
        g, m, _ = rod_melnikov_grid(p, 32, gamma_hat=1.0)
        devs.append(np.max(np.abs(m - melnikov_leading(g, 0.5, mu, mu / 10))) / math.sqrt(mu))
    assert devs[1] <= 1.2 * devs[0] and devs[2] <= 1.2 * devs[1]
    assert devs[2] < devs[0] / 10
