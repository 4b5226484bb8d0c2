"""Melnikov functions for perturbed integrable two-degree-of-freedom systems.

A problem supplies the gradients of the unperturbed Hamiltonian ``H0``, of
the perturbation ``H1`` and of an extra integral ``K`` of ``H0``, together
with a family of homoclinic orbits ``x(t; kappa)`` of ``H0``.  The Melnikov
function is

    M(kappa) = integral over t of  grad K . J grad H1   along x(t; kappa).

Gradients are taken by complex-step differentiation, so the callables must
accept complex arrays of shape (4, ...).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .analytic import HomoclinicFamily
from .errors import RegimeViolation
from .model import SYMPLECTIC, Params, first_integral_array, pole_ratio
from .numerics import QuadratureConfig, quad_realline

CSTEP = 1e-20


def complex_step_gradient(f: Callable, x) -> np.ndarray:
    """Gradient of a scalar function of a (4, ...) array, exact to rounding."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        xc = x.astype(complex)
        xc[i] = xc[i] + 1j * CSTEP
        out[i] = np.imag(f(xc)) / CSTEP
    return out


def bracket(grad_a, grad_b) -> np.ndarray:
    """``grad_a . J grad_b`` for gradient arrays of shape (4, ...)."""
    return np.einsum("i...,ij,j...->...", grad_a, SYMPLECTIC, grad_b)


@dataclass
class MelnikovProblem:
    """Data of a Melnikov computation; the gradients act on (4, ...) arrays."""

    grad_H0: Callable
    grad_H1: Callable
    grad_K: Callable
    family: Callable  # (t, kappa) -> states of shape (4, len(t))
    kappa_domain: Tuple[float, float]
    periodic: bool = False
    decay_rate: Optional[float] = None
    name: str = "custom"

    def integrand(self, kappa) -> Callable:
        def g(t):
            x = self.family(np.asarray(t, dtype=float), kappa)
            return bracket(self.grad_K(x), self.grad_H1(x))

        return g

    def involution_residual(self, samples=33, half_width=10.0, kappas=None) -> float:
        """Largest ``|grad K . J grad H0|`` at sampled family points."""
        lo, hi = self.kappa_domain
        kappas = np.linspace(lo, hi, 5) if kappas is None else kappas
        t = np.linspace(-half_width, half_width, samples)
        worst = 0.0
        for k in kappas:
            x = self.family(t, k)
            worst = max(worst, float(np.max(np.abs(bracket(self.grad_K(x), self.grad_H0(x))))))
        return worst

    def decay_residual(self, half_width, kappa=None) -> float:
        """Distance between the family at +-half_width and its limits, probed at 4 half_width."""
        k = self.kappa_domain[0] if kappa is None else kappa
        far = self.family(np.array([-4 * half_width, 4 * half_width]), k)
        near = self.family(np.array([-half_width, half_width]), k)
        # psi keeps rotating along the orbit; only theta and the momenta settle
        d = near - far
        return float(np.max(np.abs(d[[0, 2, 3]])))

    def validate(self, tol=1e-6):
        r = self.involution_residual()
        if not r <= tol:
            raise ValueError(f"K is not in involution with H0 along the family (residual {r:.3e})")


@dataclass
class Zero:
    kappa: float
    slope: float
    simple: bool


@dataclass
class MelnikovResult:
    kappa_grid: np.ndarray
    M_values: np.ndarray
    zeros: List[Zero] = field(default_factory=list)
    errors: Optional[np.ndarray] = None


def melnikov(problem: MelnikovProblem, kappa, qcfg: QuadratureConfig, full_output=False):
    """M(kappa) by quadrature over the real line."""
    if problem.decay_rate is not None and qcfg.decay_rate is None:
        qcfg = QuadratureConfig(qcfg.half_width, qcfg.node_count, qcfg.scheme, problem.decay_rate,
                                qcfg.panel_order)
    return quad_realline(problem.integrand(kappa), qcfg, full_output)


def _default_qcfg(problem: MelnikovProblem) -> QuadratureConfig:
    rate = problem.decay_rate or 0.5
    return QuadratureConfig(half_width=40.0 / rate, node_count=2048)


def find_simple_zeros(problem: MelnikovProblem, grid_size=64, qcfg: Optional[QuadratureConfig] = None,
                      xtol=1e-10, simple_rel=1e-6, fn: Optional[Callable] = None) -> MelnikovResult:
    """Sample M on a uniform grid, bracket and refine its zeros, flag simple ones.

    Sign changes are refined with Brent's bisection/secant hybrid.  Grid
    minima of ``|M|`` without a sign change are minimised and kept when M
    vanishes there to rounding, which catches even-order zeros.  ``fn``
    replaces the quadrature by a direct function of kappa (used for
    synthetic checks).  Periodic domains exclude the right end point.
    """
    qcfg = qcfg or _default_qcfg(problem)
    lo, hi = map(float, problem.kappa_domain)
    if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
        raise ValueError("kappa_domain must be a finite interval")
    period = hi - lo
    f = fn if fn is not None else (lambda k: melnikov(problem, k, qcfg))
    if problem.periodic:
        grid = lo + period * np.arange(grid_size) / grid_size
    else:
        grid = np.linspace(lo, hi, grid_size)
    vals = np.array([f(k) for k in grid])
    scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    atol = 1e-13 * scale
    step = grid[1] - grid[0]

    nodes = list(zip(grid, vals))
    if problem.periodic:
        nodes.append((hi, vals[0]))
    found = []
    n = len(nodes)
    for i, (k, v) in enumerate(nodes):
        if abs(v) <= atol and not (problem.periodic and i == n - 1):
            found.append(k)
    for i in range(n - 1):
        (k0, v0), (k1, v1) = nodes[i], nodes[i + 1]
        if abs(v0) <= atol or abs(v1) <= atol:
            continue
        if np.sign(v0) != np.sign(v1):
            found.append(brentq(f, k0, k1, xtol=xtol, rtol=4 * np.finfo(float).eps))
    # touching zeros: local minima of |M| with no sign change nearby
    av = np.abs(vals)
    for i in range(grid_size):
        left = i - 1 if (i > 0 or problem.periodic) else None
        right = i + 1 if (i < grid_size - 1 or problem.periodic) else None
        if left is None or right is None:
            continue
        vl, vr = vals[left % grid_size], vals[right % grid_size]
        if not (av[i] <= abs(vl) and av[i] <= abs(vr)) or av[i] <= atol:
            continue
        if np.sign(vl) != np.sign(vals[i]) or np.sign(vr) != np.sign(vals[i]):
            continue
        res = minimize_scalar(lambda k: abs(f(k)), bounds=(grid[i] - step, grid[i] + step),
                              method="bounded", options={"xatol": xtol})
        if abs(f(res.x)) <= max(1e-8 * scale, atol):
            found.append(float(res.x))

    zeros = []
    h = 1e-5 * period
    threshold = simple_rel * scale
    for k in sorted(found):
        if problem.periodic:
            k = lo + math.fmod(k - lo, period)
            if period - (k - lo) < xtol:
                k = lo
        if any(abs(k - z.kappa) < 10 * xtol for z in zeros):
            continue
        slope = (f(k + h) - f(k - h)) / (2 * h)
        zeros.append(Zero(float(k), float(slope), bool(abs(slope) > threshold)))
    zeros.sort(key=lambda z: z.kappa)
    return MelnikovResult(grid, vals, zeros)


# rod instantiation -----------------------------------------------------------

def rod_h0(x, alpha, mu, nu):
    """Unperturbed Hamiltonian, including the unfolding coupling."""
    theta, psi, pt, pp = x
    st, ct = np.sin(theta), np.cos(theta)
    return (0.5 * pt**2 + 0.5 * pole_ratio(pp, theta, st, ct) ** 2 + alpha * ct
            + st * np.cos(psi) * np.sqrt(mu - 2 * nu * pp))


def rod_h1(x, alpha, mu, nu, gamma_hat):
    """Perturbation multiplying eps, with gamma = eps * gamma_hat."""
    theta, psi, pt, pp = x
    st, ct = np.sin(theta), np.cos(theta)
    rad = mu - 2 * nu * pp
    cp = np.cos(psi)
    return (-pp + 0.5 * alpha * gamma_hat * ct**2
            + gamma_hat * st * ct * cp * np.sqrt(rad)
            + gamma_hat / (2 * alpha) * st**2 * cp**2 * rad)


def rod_problem(p: Params, gamma_hat: Optional[float] = None, branch=1) -> MelnikovProblem:
    """Melnikov problem of the rod with K = F and kappa = psi0 on [0, 2 pi).

    The family is the leading-order homoclinic orbit with ``p_psi = 1``.
    ``gamma_hat`` defaults to ``p.gamma_hat`` (0 when unset).
    """
    alpha, mu, nu = p.alpha, p.mu, p.nu
    if not alpha > 0.25:
        raise RegimeViolation(f"alpha must exceed 1/4, got {alpha}")
    if not (0 < mu < 0.2):
        raise RegimeViolation(f"need 0 < mu < 0.2, got mu={mu}")
    if not (0 <= nu < mu / 4):
        raise RegimeViolation(f"need 0 <= nu < mu/4, got nu={nu}, mu={mu}")
    gh = gamma_hat if gamma_hat is not None else (p.gamma_hat or 0.0)
    base = Params(alpha=alpha, mu=mu, nu=nu)
    fam = HomoclinicFamily(alpha, branch)

    def family(t, kappa):
        return fam.at_phase(kappa).state(t)

    return MelnikovProblem(
        grad_H0=lambda x: complex_step_gradient(lambda y: rod_h0(y, alpha, mu, nu), x),
        grad_H1=lambda x: complex_step_gradient(lambda y: rod_h1(y, alpha, mu, nu, gh), x),
        grad_K=lambda x: complex_step_gradient(lambda y: first_integral_array(y, base), x),
        family=family,
        kappa_domain=(0.0, 2 * math.pi),
        periodic=True,
        decay_rate=fam.delta,
        name=f"rod(alpha={alpha}, mu={mu}, nu={nu}, gamma_hat={gh}, branch={branch})",
    )


def simplified_integrand(alpha, mu, nu, psi0, branch=1) -> Callable:
    """``-dF/dpsi`` written out along the family (the gamma_hat terms dropped)."""
    fam = HomoclinicFamily(alpha, branch, psi0)

    def g(t):
        theta, psi, pt, pp = fam.state(np.asarray(t, dtype=float))
        st = np.sin(theta)
        lean = (1 - pp) / st + pp * pole_ratio(1.0, theta, st, np.cos(theta))
        return np.sqrt(mu - 2 * nu * pp) / alpha * (pt * np.cos(psi) + lean * np.sin(psi))

    return g


def rod_melnikov_grid(p: Params, grid_size=32, qcfg: Optional[QuadratureConfig] = None,
                      gamma_hat=None, branch=1):
    """``(psi0 grid, M values, quadrature error bounds)`` on [0, 2 pi)."""
    prob = rod_problem(p, gamma_hat, branch)
    qcfg = qcfg or _default_qcfg(prob)
    grid = 2 * math.pi * np.arange(grid_size) / grid_size
    res = [melnikov(prob, k, qcfg, full_output=True) for k in grid]
    return grid, np.array([r.value for r in res]), np.array([r.error for r in res])
