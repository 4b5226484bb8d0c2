"""Numerical kernels: adaptive integration, Newton, 4x4 eigen-data, real-line quadrature."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import solve_ivp

from .errors import (
    DefectiveMatrix,
    NoConvergence,
    RodError,
    SingularityReached,
    SingularJacobian,
    StepUnderflow,
    TailTooFat,
)


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    max_step: float = math.inf
    dense_output: bool = True

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not 0 < v <= 1e-2:
                raise ValueError(f"{name} must lie in (0, 1e-2], got {v}")


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray  # shape (len(t), dim)
    sol: Optional[Callable] = None
    t_events: Optional[list] = None
    y_events: Optional[list] = None

    def __call__(self, t):
        if self.sol is None:
            raise ValueError("trajectory was integrated without dense output")
        out = self.sol(t)
        return out.T if np.ndim(t) else out

    @property
    def end(self) -> np.ndarray:
        return self.y[-1]


def integrate(field, s0, t_span, cfg: IntegratorConfig = IntegratorConfig(), events=None,
              t_eval=None) -> Trajectory:
    """Integrate ``x' = field(t, x)`` with an embedded Dormand-Prince 8(5,3) pair.

    Any :class:`RodError` raised by ``field`` is reported as
    :class:`SingularityReached`.
    """
    y0 = np.asarray(s0, dtype=float)
    try:
        res = solve_ivp(
            field, t_span, y0, method="DOP853",
            rtol=cfg.rel_tol, atol=cfg.abs_tol, max_step=cfg.max_step,
            dense_output=cfg.dense_output, events=events, t_eval=t_eval,
        )
    except SingularityReached:
        raise
    except RodError as exc:
        raise SingularityReached(f"{type(exc).__name__}: {exc}") from exc
    if res.status == -1:
        if not np.all(np.isfinite(res.y)):
            raise SingularityReached(res.message)
        raise StepUnderflow(res.message)
    return Trajectory(res.t, res.y.T, res.sol, res.t_events, res.y_events)


def fd_jacobian(f, x, fx=None, step=None):
    x = np.asarray(x, dtype=float)
    n = x.size
    h = step if step is not None else np.sqrt(np.finfo(float).eps) * max(1.0, np.linalg.norm(x))
    cols = []
    for k in range(n):
        dx = np.zeros(n)
        dx[k] = h
        cols.append((np.asarray(f(x + dx)) - np.asarray(f(x - dx))) / (2 * h))
    return np.column_stack(cols)


def newton_solve(f, x0, tol=1e-12, max_iter=50, jac=None, full_output=False):
    """Solve ``f(x) = 0`` by Newton's method with a finite-difference Jacobian.

    Returns the root, or ``(root, iterations)`` when ``full_output`` is set.
    A seed that already satisfies the tolerance is returned unchanged.
    """
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    fx = np.atleast_1d(np.asarray(f(x), dtype=float))
    for it in range(max_iter + 1):
        if np.max(np.abs(fx)) <= tol:
            return (x, it) if full_output else x
        if it == max_iter:
            break
        jm = jac(x) if jac is not None else fd_jacobian(f, x, fx)
        jm = np.atleast_2d(jm)
        if not np.all(np.isfinite(jm)) or np.linalg.cond(jm) > 1e14:
            raise SingularJacobian(f"Jacobian is singular at iteration {it}")
        dx = np.linalg.solve(jm, -fx)
        # simple backtracking keeps wild first steps out of the domain of f
        lam = 1.0
        while True:
            try:
                trial = x + lam * dx
                ft = np.atleast_1d(np.asarray(f(trial), dtype=float))
                if np.all(np.isfinite(ft)) and (
                    np.linalg.norm(ft) < np.linalg.norm(fx) or lam < 1e-3
                ):
                    break
            except RodError:
                pass
            lam *= 0.5
            if lam < 1e-6:
                raise NoConvergence(f"line search failed at iteration {it}")
        x, fx = trial, ft
    raise NoConvergence(f"no convergence after {max_iter} iterations, |f|={np.max(np.abs(fx)):.3e}")


class Eigen(NamedTuple):
    values: np.ndarray  # (4,) complex
    right: np.ndarray  # columns are right eigenvectors
    left: np.ndarray  # rows are left eigenvectors, left @ right = I


def eigen4(m) -> Eigen:
    """Eigenvalues with right and biorthonormal left eigenvectors of a small real matrix."""
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    # entries far below rounding level of the largest one derail LAPACK balancing
    scale = np.abs(m).max()
    m = np.where(np.abs(m) < 1e-32 * scale, 0.0, m)
    values, right = np.linalg.eig(m)
    right = right / np.linalg.norm(right, axis=0)
    if np.linalg.cond(right) > 1e12:
        raise DefectiveMatrix("eigenvector matrix is numerically singular")
    left = np.linalg.inv(right)
    return Eigen(values, right, left)


def realify(vec) -> np.ndarray:
    """Rows ``u, w`` of ``u + i w`` with the largest-magnitude entry of ``u`` positive."""
    vec = np.asarray(vec, dtype=complex)
    # rotate the complex phase so that u and w are orthogonal; makes the frame deterministic
    a = vec.real @ vec.real - vec.imag @ vec.imag
    b = 2 * vec.real @ vec.imag
    vec = vec * np.exp(-0.5j * math.atan2(b, a))
    u, w = vec.real, vec.imag
    k = np.argmax(np.abs(u))
    if u[k] < 0:
        u, w = -u, -w
    return np.vstack([u, w])


@dataclass(frozen=True)
class QuadratureConfig:
    half_width: float
    node_count: int = 2048
    scheme: str = "gauss"
    decay_rate: Optional[float] = None
    panel_order: int = 16

    def __post_init__(self):
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")
        if self.node_count < 64:
            raise ValueError("node_count must be at least 64")
        if self.scheme not in ("gauss", "tanh-sinh"):
            raise ValueError(f"unknown quadrature scheme {self.scheme!r}")


class QuadResult(NamedTuple):
    value: float
    error: float
    decay_rate: float


def _gauss_rule(half_width, panels, order):
    x, w = leggauss(order)
    edges = np.linspace(-half_width, half_width, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    return (mid + half * x).ravel(), (half * w).ravel()


def _tanh_sinh_rule(half_width, n):
    # truncate u where the weights drop below double precision
    u_max = math.asinh(2 / math.pi * 37.5)
    u = np.linspace(-u_max, u_max, n)
    h = u[1] - u[0]
    s = 0.5 * math.pi * np.sinh(u)
    x = np.tanh(s)
    w = h * 0.5 * math.pi * np.cosh(u) / np.cosh(s) ** 2
    return half_width * x, half_width * w


def _rule(cfg: QuadratureConfig, coarse=False):
    if cfg.scheme == "gauss":
        panels = max(1, cfg.node_count // cfg.panel_order)
        if coarse:
            panels = max(1, panels // 2)
        return _gauss_rule(cfg.half_width, panels, cfg.panel_order)
    n = cfg.node_count if not coarse else cfg.node_count // 2
    return _tanh_sinh_rule(cfg.half_width, n | 1)


def _envelope(g, centre, width, n=33):
    pts = np.linspace(centre - width, centre + width, n)
    return float(np.max(np.abs(g(pts))))


def probe_decay(g, half_width) -> tuple[float, float]:
    """Estimate the exponential decay rate of ``|g|`` and its envelope at ``+-half_width``."""
    rate, _, edge, _ = _probe(g, half_width)
    return rate, edge


def _probe(g, half_width):
    # decay rates over [T/4, T/2] and [T/2, T]; they agree for exponential tails
    T = half_width
    w = 0.05 * T
    env = [max(_envelope(g, c - w, w), _envelope(g, -c + w, w)) for c in (T, 0.5 * T + w, 0.25 * T + w)]
    outer, mid, inner = env
    peak = max(inner, _envelope(g, 0.0, w))
    if outer == 0.0 or mid == 0.0:
        return math.inf, math.inf, outer, peak
    rate = math.log(mid / outer) / (0.5 * T - w)
    rate_in = math.log(inner / mid) / (0.25 * T) if inner > 0 else math.inf
    return rate, rate_in, outer, peak


def quad_realline(g, cfg: QuadratureConfig, full_output=False):
    """Integrate a vectorised, exponentially decaying ``g`` over ``[-T, T]``.

    The error estimate adds the difference to a half-resolution rule and the
    tail bound ``|g(T)| / rho`` from the probed (or supplied) decay rate ``rho``.
    """
    T = cfg.half_width
    rho, rho_in, edge, peak = _probe(g, T)
    fat = rho <= 0 or rho * T < 2.0 or rho < 0.6 * rho_in
    # tails already at roundoff level carry no information about the decay
    if edge > 1e-12 * peak and fat:
        raise TailTooFat(f"integrand does not decay exponentially (rate {rho:.3g} at T={T:g})")
    if cfg.decay_rate is not None:
        rho = cfg.decay_rate
    x, w = _rule(cfg)
    value = float(np.dot(w, g(x)))
    xc, wc = _rule(cfg, coarse=True)
    rule_err = abs(value - float(np.dot(wc, g(xc))))
    tail = 2 * edge / rho if edge > 0 else 0.0
    result = QuadResult(value, rule_err + tail, rho)
    return result if full_output else result.value
