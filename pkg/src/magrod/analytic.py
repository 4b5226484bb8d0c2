"""Closed-form reference objects: homoclinic orbits, equilibria, Melnikov amplitude.

Everything here is exact (or leading order in the unfolding parameter) and
serves as the oracle layer for the numerical modules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Params, State, jacobian
from .numerics import eigen4, realify


@dataclass(frozen=True)
class HomoclinicFamily:
    """Leading-order homoclinic orbit of the Kirchhoff rod with p_psi = 1.

    ``branch`` picks one orbit of the pair (theta > 0 for +1, theta < 0 for -1)
    and drives every sign in the closed-form expressions.
    """

    alpha: float
    branch: int = 1
    psi0: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0.25:
            raise ValueError(f"homoclinic orbits need alpha > 1/4, got {self.alpha}")
        if self.branch not in (1, -1):
            raise ValueError("branch must be +1 or -1")

    @property
    def delta(self) -> float:
        return math.sqrt(self.alpha - 0.25)

    def at_phase(self, psi0) -> "HomoclinicFamily":
        return HomoclinicFamily(self.alpha, self.branch, psi0)

    def state(self, t) -> np.ndarray:
        """Orbit as an array of shape (4, ...) in (theta, psi, p_theta, p_psi) order."""
        th, pt, ps = homoclinic_orbit(self, t)
        return np.array([th, ps, pt, np.ones_like(th)])


def homoclinic_orbit(fam: HomoclinicFamily, t):
    """``(theta, p_theta, psi)`` on the homoclinic orbit at time(s) ``t``."""
    t = np.asarray(t, dtype=float)
    d = fam.delta
    root = 2.0 * d  # sqrt(4 alpha - 1)
    sech = 1.0 / np.cosh(d * t)
    tanh = np.tanh(d * t)
    # 1 - cos(theta) = c sech^2, written through sin(theta/2) to keep the tails accurate
    half = np.sqrt(root**2 / (4.0 * fam.alpha)) * sech
    theta = fam.branch * 2.0 * np.arcsin(np.clip(half, -1.0, 1.0))
    # closed-form derivative of theta; see homoclinic_rewritten for the same expression
    p_theta = -fam.branch * root**2 * sech * tanh / np.sqrt(root**2 * tanh**2 + 1.0)
    psi = 0.5 * t + np.arctan(root * tanh) + fam.psi0
    return theta, p_theta, psi


def homoclinic_rewritten(fam: HomoclinicFamily, t):
    """``(sin/(1+cos) of theta, p_theta, psi)`` written with delta = sqrt(alpha - 1/4).

    The momentum carries the factor ``4 delta**2`` that exact differentiation
    of theta produces.
    """
    t = np.asarray(t, dtype=float)
    d = fam.delta
    sech = 1.0 / np.cosh(d * t)
    tanh = np.tanh(d * t)
    q = np.sqrt(4 * d * d * tanh**2 + 1.0)
    ratio = fam.branch * 2 * d * sech / q
    p_theta = -fam.branch * 4 * d * d * sech * tanh / q
    psi = 0.5 * t + np.arctan(2 * d * tanh) + fam.psi0
    return ratio, p_theta, psi


def delta_integrand(fam: HomoclinicFamily):
    """Integrand whose integral over the real line is the Melnikov amplitude."""

    def g(t):
        theta, p_theta, psi = homoclinic_orbit(fam, t)
        return np.sin(theta) / (1 + np.cos(theta)) * np.cos(psi) - p_theta * np.sin(psi)

    return g


def reduced_delta_integrand(alpha):
    """``2 delta sech(delta t) cos(t/2)``, the simplified form of :func:`delta_integrand`."""
    d = math.sqrt(alpha - 0.25)
    return lambda t: 2 * d / np.cosh(d * np.asarray(t)) * np.cos(0.5 * np.asarray(t))


def delta_amplitude(alpha) -> float:
    if not alpha > 0.25:
        raise ValueError(f"alpha must exceed 1/4, got {alpha}")
    return 2 * math.pi / math.cosh(math.pi / (2 * math.sqrt(4 * alpha - 1)))


def melnikov_leading(psi0, alpha, mu, nu, branch=1):
    """Leading-order Melnikov function; the neglected remainder is O(mu)."""
    if not alpha > 0.25:
        raise ValueError(f"alpha must exceed 1/4, got {alpha}")
    if not mu - 2 * nu > 0:
        raise ValueError("mu - 2 nu must be positive")
    amp = math.sqrt(mu - 2 * nu) * delta_amplitude(alpha) / alpha
    return branch * amp * np.sin(psi0)


@dataclass(frozen=True)
class Equilibrium:
    """Saddle-focus equilibrium with its eigen-data.

    ``stable_frame`` (L_s) holds the realified left eigenvectors of the stable
    pair and annihilates the unstable plane; ``unstable_frame`` (L_u) mirrors
    it.  ``unstable_plane``/``stable_plane`` are the realified right
    eigenvectors used for seeding orbits on the manifolds.
    """

    state: np.ndarray
    params: Params
    eigenvalues: np.ndarray
    stable_frame: np.ndarray
    unstable_frame: np.ndarray
    unstable_plane: np.ndarray
    stable_plane: np.ndarray
    jacobian: np.ndarray

    @property
    def growth(self) -> float:
        return float(np.max(self.eigenvalues.real))

    @property
    def rotation(self) -> float:
        return float(np.max(np.abs(self.eigenvalues.imag)))

    @classmethod
    def from_jacobian(cls, state, params: Params, jac, eigenvalues=None) -> "Equilibrium":
        eig = eigen4(jac)
        order = np.lexsort((-eig.values.imag, -eig.values.real))
        vals = eig.values[order]
        right = eig.right[:, order]
        left = eig.left[order]
        # vals: [a+bi, a-bi, -a+bi, -a-bi] for a saddle-focus
        up = realify(right[:, 0])
        sp = realify(right[:, 2])
        lu = realify(left[0])
        ls = realify(left[2])
        if eigenvalues is not None:
            vals = np.asarray(eigenvalues, dtype=complex)
        return cls(np.asarray(state, dtype=float), params, vals, ls, lu, up, sp, np.asarray(jac))


def saddle_focus_eigenvalues(alpha, mu) -> np.ndarray:
    a = math.sqrt(math.sqrt(alpha**2 + mu) - 0.25)
    return np.array([a + 0.5j, a - 0.5j, -a + 0.5j, -a - 0.5j])


def closed_form_jacobian(alpha, mu, which=1) -> np.ndarray:
    """Linearisation at either closed-form equilibrium of the eps = gamma = nu = 0 system."""
    r = math.sqrt(alpha**2 + mu)
    q = math.sqrt((alpha**2 + mu) / mu)
    sign = 1.0 if which == 1 else -1.0
    return np.array([
        [0.0, 0.0, 1.0, 0.0],
        [sign * q, 0.0, 0.0, (alpha**2 + mu) / mu],
        [-1.0 + r, 0.0, 0.0, -sign * q],
        [0.0, mu / r, 0.0, 0.0],
    ])


def hyperbolic_equilibria(alpha, mu):
    """The two equilibria of the eps = gamma = nu = 0 system near the pole."""
    if not alpha > 0.25:
        raise ValueError(f"alpha must exceed 1/4, got {alpha}")
    if not mu > 0:
        raise ValueError("mu must be positive")
    params = Params(alpha=alpha, mu=mu)
    theta0 = math.atan(math.sqrt(mu) / alpha)
    p_psi0 = alpha / math.sqrt(alpha**2 + mu)
    vals = saddle_focus_eigenvalues(alpha, mu)
    out = []
    for st in (State(theta0, 0.0, 0.0, p_psi0), State(-theta0, math.pi, 0.0, p_psi0)):
        out.append(Equilibrium.from_jacobian(np.array(st), params, jacobian(st, params), vals))
    return tuple(out)
