"""Fast flow maps of the rod system built on the compiled kernel in :mod:`magrod._flow`."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _flow
from .errors import EscapeDetected, SingularityReached, StepUnderflow
from .model import TOL_SING, Params
from .numerics import IntegratorConfig

PSI, THETA, P_THETA, P_PSI = 1, 0, 2, 3
COORDS = ("theta", "psi", "p_theta", "p_psi")


@dataclass(frozen=True)
class Section:
    """Hyperplane ``normal . x = offset`` crossed in ``direction`` (+1, -1, 0 = both).

    With ``periodic`` set the offset is taken modulo 2 pi, which is how the
    angle sections ``psi = 0`` are meant.
    """

    normal: tuple
    offset: float = 0.0
    direction: int = 1
    periodic: bool = False
    name: str = "custom"

    @classmethod
    def psi(cls, value=0.0, direction=1):
        return cls((0.0, 1.0, 0.0, 0.0), value, direction, True, "psi")

    @classmethod
    def p_theta(cls, value=0.0, direction=1):
        return cls((0.0, 0.0, 1.0, 0.0), value, direction, False, "p_theta")

    @classmethod
    def parse(cls, text: str, direction=1) -> "Section":
        """``"psi"``, ``"p_theta"``, ``"psi=0.5"`` or ``"a,b,c,d=offset"``."""
        name, _, rhs = text.partition("=")
        value = float(rhs) if rhs else 0.0
        name = name.strip()
        if name == "psi":
            return cls.psi(value, direction)
        if name == "p_theta":
            return cls.p_theta(value, direction)
        normal = tuple(float(v) for v in name.split(","))
        if len(normal) != 4:
            raise ValueError(f"cannot parse section {text!r}")
        return cls(normal, value, direction)

    @property
    def normal_array(self) -> np.ndarray:
        return np.asarray(self.normal, dtype=float)

    def value(self, x) -> float:
        """Signed distance to the section (wrapped into (-pi, pi] when periodic)."""
        g = float(self.normal_array @ np.asarray(x, dtype=float)) - self.offset
        if self.periodic:
            g = math.remainder(g, 2 * math.pi)
        return g

    def on_section(self, x, tol=1e-10) -> bool:
        return abs(self.value(x)) <= tol


@dataclass
class DenseTrajectory:
    """Piecewise seventh-degree interpolant produced by the kernel."""

    t: np.ndarray
    y: np.ndarray
    coeffs: np.ndarray

    def __call__(self, t):
        scalar = np.ndim(t) == 0
        tq = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((tq.size, 4))
        forward = self.t[-1] >= self.t[0]
        knots = self.t if forward else self.t[::-1]
        for n, tv in enumerate(tq):
            i = np.searchsorted(knots, tv) - 1
            i = min(max(i, 0), len(self.t) - 2)
            if not forward:
                i = len(self.t) - 2 - i
            h = self.t[i + 1] - self.t[i]
            x = (tv - self.t[i]) / h if h != 0 else 0.0
            _flow.dense_eval(self.coeffs[i], self.y[i], x, out[n])
        return out[0] if scalar else out

    @property
    def end(self) -> np.ndarray:
        return self.y[-1]

    def sample(self, n=400):
        ts = np.linspace(self.t[0], self.t[-1], n)
        return ts, self(ts)


@dataclass
class FlowResult:
    status: int
    t: float
    y: np.ndarray
    crossings_t: np.ndarray
    crossings_y: np.ndarray
    trajectory: Optional[DenseTrajectory] = None


class RodFlow:
    """Flow of the rod system for one parameter set and tolerance budget."""

    def __init__(self, params: Params, cfg: IntegratorConfig = IntegratorConfig(1e-11, 1e-12),
                 tol_sing: float = TOL_SING, max_steps: int = 200_000):
        self.params = params
        self.cfg = cfg
        self.par = _flow.pack(params, tol_sing)
        self.max_steps = max_steps

    def run(self, x0, t0, t1, dense=False, section: Optional[Section] = None, max_cross=0,
            bound=0.0, allow_stop=False) -> FlowResult:
        x0 = np.array(x0, dtype=float)
        if section is None:
            normal, offset, periodic, direction, use = np.zeros(4), 0.0, False, 0, False
        else:
            normal, offset = section.normal_array, float(section.offset)
            periodic, direction, use = section.periodic, int(section.direction), True
        max_step = self.cfg.max_step if math.isfinite(self.cfg.max_step) else 1e300
        status, t, y, n, ts, ys, fs, ct, cy, nc = _flow.integrate(
            x0, float(t0), float(t1), self.par, self.cfg.rel_tol, self.cfg.abs_tol,
            self.max_steps, dense, use, normal, offset, periodic, direction, max_cross,
            float(bound), max_step,
        )
        if status == _flow.SINGULAR:
            raise SingularityReached(f"orbit reached the singular set near t={t:.6g}, state={y}")
        if status in (_flow.UNDERFLOW, _flow.BUDGET):
            raise StepUnderflow(f"integration stalled at t={t:.6g} (status {status})")
        if status == _flow.ESCAPED and not allow_stop:
            raise EscapeDetected(f"orbit left the bound {bound} at t={t:.6g}")
        traj = DenseTrajectory(ts[: n + 1].copy(), ys[: n + 1].copy(), fs[:n].copy()) if dense else None
        return FlowResult(status, t, y.copy(), ct[:nc].copy(), cy[:nc].copy(), traj)

    def __call__(self, x0, t0, t1) -> np.ndarray:
        return self.run(x0, t0, t1).y

    def trajectory(self, x0, t0, t1) -> DenseTrajectory:
        return self.run(x0, t0, t1, dense=True).trajectory

    def crossings(self, x0, t0, t1, section: Section, max_cross=0, bound=0.0):
        res = self.run(x0, t0, t1, section=section, max_cross=max_cross, bound=bound)
        return res.crossings_t, res.crossings_y

    def with_jacobian(self, x0, t0, t1, fd=1e-7):
        """End state and 4x4 flow-map Jacobian."""
        status, t, y, jac = _flow.flow_with_jacobian(
            np.array(x0, dtype=float), float(t0), float(t1), self.par,
            self.cfg.rel_tol, self.cfg.abs_tol, self.max_steps, fd,
        )
        if status == _flow.SINGULAR:
            raise SingularityReached(f"orbit reached the singular set near t={t:.6g}")
        if status != _flow.OK:
            raise StepUnderflow(f"integration stalled at t={t:.6g} (status {status})")
        return y.copy(), jac.copy()
