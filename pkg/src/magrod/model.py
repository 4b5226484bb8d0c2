"""Reduced Hamiltonian system of an extensible conducting rod in a uniform field.

Coordinates are the Euler angles ``theta``, ``psi`` and their dimensionless
conjugate momenta ``p_theta``, ``p_psi``.  Every evaluator accepts any length-4
sequence (a :class:`State`, a tuple or a numpy array).  The underscored
``*_array`` kernels take arrays of shape ``(4, ...)`` and skip the domain
checks; they are used by the integrators, which do their own checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import NegativeRadicand, SingularState, ZeroScale

TOL_SING = 1e-10

#: canonical symplectic matrix for the ordering (theta, psi, p_theta, p_psi)
SYMPLECTIC = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])


class State(NamedTuple):
    theta: float
    psi: float
    p_theta: float
    p_psi: float


@dataclass(frozen=True)
class Params:
    """Dimensionless parameter bundle.

    ``gamma`` is stored directly.  ``gamma_hat`` is only set by
    :meth:`scaled`, which ties the extensibility parameter to the perturbation
    size through ``gamma = eps * gamma_hat``.
    """

    alpha: float
    mu: float = 0.0
    nu: float = 0.0
    eps: float = 0.0
    gamma: float = 0.0
    gamma_hat: Optional[float] = None

    def __post_init__(self):
        if self.mu < 0 or self.nu < 0:
            raise ValueError(f"mu and nu must be non-negative, got mu={self.mu}, nu={self.nu}")
        if self.gamma_hat is not None and not math.isclose(
            self.gamma, self.eps * self.gamma_hat, rel_tol=1e-12, abs_tol=1e-300
        ):
            raise ValueError("gamma must equal eps * gamma_hat when gamma_hat is set")

    @classmethod
    def scaled(cls, alpha, mu, nu, eps, gamma_hat=0.0):
        return cls(alpha=alpha, mu=mu, nu=nu, eps=eps, gamma=eps * gamma_hat, gamma_hat=gamma_hat)

    def unperturbed(self) -> "Params":
        """The same parameters with the extensibility terms switched off."""
        return replace(self, eps=0.0, gamma=0.0, gamma_hat=None)

    def with_(self, **changes) -> "Params":
        if "gamma_hat" not in changes and ("eps" in changes or "gamma" in changes):
            changes["gamma_hat"] = None
        return replace(self, **changes)


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensional rod and field constants.

    ``lam`` is the magnetic parameter (current times field strength); ``K`` may
    be ``math.inf`` for an axially rigid rod.
    """

    B: float
    J: float
    K: float
    lam: float
    C1: float
    C2: float
    p_phi: float

    def __post_init__(self):
        if self.p_phi == 0:
            raise ZeroScale("p_phi must be non-zero")
        if not (self.B > 0 and self.J > 0 and self.K > 0):
            raise ValueError("stiffnesses B, J, K must be positive")


@dataclass(frozen=True)
class Scaling:
    params: Params
    momentum_scale: float
    energy_scale: float

    def state_to_dimensionless(self, theta, psi, p_theta, p_psi) -> State:
        return State(theta, psi, p_theta / self.momentum_scale, p_psi / self.momentum_scale)

    def state_to_dimensional(self, s: Sequence[float]) -> State:
        theta, psi, pt, pp = s
        return State(theta, psi, pt * self.momentum_scale, pp * self.momentum_scale)


def nondimensionalize(ph: PhysicalParams) -> Scaling:
    p_phi = ph.p_phi
    if p_phi == 0:
        raise ZeroScale("p_phi must be non-zero")
    compliance = 1.0 / ph.K - 1.0 / ph.J
    params = Params(
        alpha=ph.B * ph.C2 / p_phi**2,
        mu=ph.B**2 * (2 * ph.C1 - ph.C2**2) / p_phi**4,
        nu=ph.lam * ph.B**2 / p_phi**3,
        eps=ph.lam * ph.B / (ph.J * p_phi),
        gamma=ph.C2 * compliance,
    )
    return Scaling(params, momentum_scale=p_phi, energy_scale=p_phi**2 / ph.B)


def _check(s, p: Params, tol_sing: float):
    theta, _, _, p_psi = (float(v) for v in s)
    if abs(math.sin(theta)) <= tol_sing:
        raise SingularState(f"|sin(theta)| <= {tol_sing:g} at theta={theta!r}")
    rad = p.mu - 2.0 * p.nu * p_psi
    if rad < 0 or (rad == 0 and p.nu != 0):
        raise NegativeRadicand(f"mu - 2 nu p_psi = {rad!r} at p_psi={p_psi!r}")


def pole_ratio(c, theta, st, ct):
    """``(c - cos theta) / sin theta`` without cancellation near theta = 0.

    On the cos theta > 0 side it is evaluated as
    ``(c - 1) / sin theta + tan(theta / 2)``.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        near = (c - 1.0) / st + np.tan(0.5 * theta)
        far = (c - ct) / st
    return np.where(np.real(ct) > 0, near, far)


def hamiltonian_array(x, p: Params):
    theta, psi, pt, pp = x
    st, ct = np.sin(theta), np.cos(theta)
    cp = np.cos(psi)
    rad = p.mu - 2.0 * p.nu * pp
    g = p.gamma
    return (
        0.5 * pt**2
        + 0.5 * pole_ratio(pp, theta, st, ct) ** 2
        + p.alpha * ct * (1.0 + 0.5 * g * ct)
        + (1.0 + g * ct) * st * cp * np.sqrt(rad)
        + g / (2.0 * p.alpha) * st**2 * cp**2 * rad
        - p.eps * pp
    )


def first_integral_array(x, p: Params):
    theta, psi, pt, pp = x
    st, ct = np.sin(theta), np.cos(theta)
    root = np.sqrt(p.mu - 2.0 * p.nu * pp)
    # (1 - p_psi cos) / sin = (1 - p_psi) / sin + p_psi (1 - cos) / sin
    lean = (1.0 - pp) / st + pp * pole_ratio(1.0, theta, st, ct)
    return (
        pp
        + p.nu / p.alpha * ct
        - root / p.alpha * (pt * np.sin(psi) - np.cos(psi) * lean)
    )


def vector_field_array(x, p: Params):
    theta, psi, pt, pp = x
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(psi), np.cos(psi)
    rad = p.mu - 2.0 * p.nu * pp
    root = np.sqrt(rad)
    g, a = p.gamma, p.alpha
    # nu / sqrt(rad) is read as 0 when the magnetic coupling is absent
    coupling = p.nu / root if p.nu != 0 else 0.0
    r1 = pole_ratio(pp, theta, st, ct)
    r2 = (1.0 - pp) / st + pp * pole_ratio(1.0, theta, st, ct)
    dtheta = pt
    dpsi = (
        r1 / st
        - coupling * (1.0 + g * ct) * st * cp
        - g * p.nu / a * st**2 * cp**2
        - p.eps
    )
    dpt = (
        -r1 * r2 / st
        + a * st * (1.0 + g * ct)
        - (ct + g * (ct**2 - st**2)) * cp * root
        - g / a * st * ct * cp**2 * rad
    )
    dpp = (1.0 + g * ct) * st * sp * root + g / a * st**2 * cp * sp * rad
    return np.array([dtheta * np.ones_like(dpsi), dpsi, dpt, dpp])


def hamiltonian(s, p: Params, tol_sing: float = TOL_SING) -> float:
    _check(s, p, tol_sing)
    return float(hamiltonian_array(np.asarray(s, dtype=float), p))


def first_integral(s, p: Params, tol_sing: float = TOL_SING) -> float:
    _check(s, p, tol_sing)
    return float(first_integral_array(np.asarray(s, dtype=float), p))


def vector_field(s, p: Params, tol_sing: float = TOL_SING) -> np.ndarray:
    """Right-hand side of Hamilton's equations, ``(theta', psi', p_theta', p_psi')``."""
    _check(s, p, tol_sing)
    return vector_field_array(np.asarray(s, dtype=float), p)


def fd_step(s) -> float:
    return np.cbrt(np.finfo(float).eps) * max(1.0, float(np.linalg.norm(s)))


def jacobian(s, p: Params, tol_sing: float = TOL_SING) -> np.ndarray:
    """4x4 matrix of partial derivatives of :func:`vector_field` by central differences."""
    x = np.asarray(s, dtype=float)
    h = fd_step(x)
    if abs(math.sin(x[0])) <= tol_sing + 2 * h:
        raise SingularState(f"theta={x[0]!r} is within 2*fd_step of the polar singularity")
    jac = np.empty((4, 4))
    for k in range(4):
        dx = np.zeros(4)
        dx[k] = h
        jac[:, k] = (vector_field(x + dx, p, tol_sing) - vector_field(x - dx, p, tol_sing)) / (2 * h)
    return jac


def hamiltonian_dimensional(theta, psi, p_theta, p_psi, ph: PhysicalParams) -> float:
    """Energy of the dimensional reduced system (p_phi enters as a constant)."""
    st, ct = math.sin(theta), math.cos(theta)
    cp = math.cos(psi)
    compliance = 1.0 / ph.K - 1.0 / ph.J
    rad = 2 * ph.C1 - ph.C2**2 - 2 * ph.lam * p_psi
    if rad < 0:
        raise NegativeRadicand(f"2 C1 - C2^2 - 2 lam p_psi = {rad!r}")
    return (
        p_theta**2 / (2 * ph.B)
        + ((p_psi - ph.p_phi * ct) / st) ** 2 / (2 * ph.B)
        + ph.C2 * ct * (0.5 * ph.C2 * compliance * ct + 1.0)
        + (ph.C2 * compliance * ct + 1.0) * st * cp * math.sqrt(rad)
        + 0.5 * compliance * st**2 * cp**2 * rad
        - ph.lam / ph.J * p_psi
    )


def first_integral_dimensional(theta, psi, p_theta, p_psi, ph: PhysicalParams) -> float:
    st, ct = math.sin(theta), math.cos(theta)
    rad = 2 * ph.C1 - ph.C2**2 - 2 * ph.lam * p_psi
    return (
        ph.C2 * p_psi
        + ph.lam * ph.B * ct
        - math.sqrt(rad)
        * (p_theta * math.sin(psi) - math.cos(psi) * (ph.p_phi - p_psi * ct) / st)
    )
