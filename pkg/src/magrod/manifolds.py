"""Stable and unstable manifolds of the perturbed saddle-foci.

Orbits on W^u (W^s) are computed as solutions of a multiple-shooting boundary
value problem: the start point lies in the linear unstable (stable) plane of
the equilibrium, which the frame condition ``L (x(0) - x_eq) = 0`` enforces,
and the far end satisfies two scalar conditions.  Families of such orbits
ending on a section are traced by pseudo-arclength continuation; their end
points sample the section slice of the manifold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import expm
from scipy.optimize import brentq
from scipy.spatial import ConvexHull, cKDTree

from .analytic import Equilibrium, hyperbolic_equilibria
from .errors import (
    NoConvergence,
    NoEquilibrium,
    NoIntersection,
    NotSaddleFocus,
    RodError,
    SingularJacobian,
    StallOut,
    TangencyDetected,
)
from .flow import P_PSI, P_THETA, PSI, THETA, DenseTrajectory, RodFlow, Section
from .model import Params, hamiltonian, jacobian, vector_field, vector_field_array
from .numerics import newton_solve

STABLE, UNSTABLE = "stable", "unstable"
BVP_TOL = 1e-9
SHOOT_STEPS = 20_000
ANGLE_TOL = 1e-3


def refine_equilibrium(p: Params, seed=None, which=1, tol=1e-12) -> Equilibrium:
    """Newton-refine an equilibrium of the full system and attach its eigen-data.

    The default seed is the closed-form equilibrium of the magnetic rod
    (``which`` = 1 or 2 selects the psi = 0 or psi = pi one).
    """
    if seed is None:
        if p.mu <= 0:
            raise NoEquilibrium("the unfolding parameter mu must be positive to seed an equilibrium")
        seed = hyperbolic_equilibria(p.alpha, p.mu)[which - 1].state
    try:
        x = newton_solve(lambda s: vector_field(s, p), seed, tol=tol)
    except RodError as exc:
        raise NoEquilibrium(f"no equilibrium near {np.asarray(seed)}: {type(exc).__name__}: {exc}") from exc
    eq = Equilibrium.from_jacobian(x, p, jacobian(x, p))
    re = np.sort(eq.eigenvalues.real)
    im = np.abs(eq.eigenvalues.imag)
    scale = max(1.0, np.max(np.abs(eq.eigenvalues)))
    if not (re[0] < 0 and re[1] < 0 and re[2] > 0 and re[3] > 0 and np.all(im > 1e-8 * scale)):
        raise NotSaddleFocus(f"eigenvalues {eq.eigenvalues} are not of the form +-a +- bi")
    if abs(re[0] + re[3]) > 1e-6 * scale:
        raise NotSaddleFocus(f"eigenvalues {eq.eigenvalues} are not symmetric")
    return eq


def _unit_rows(m):
    m = np.asarray(m, dtype=float)
    return m / np.linalg.norm(m, axis=1, keepdims=True)


@dataclass(frozen=True)
class BvpSetup:
    """Boundary value problem for one orbit on W^u (``side='unstable'``) or W^s.

    The unstable orbit runs over ``[0, T]`` from the linear unstable plane to
    the end point; the stable orbit runs over ``[-T, 0]`` from the end point to
    the linear stable plane.  ``pinned`` lists the end-point coordinates that
    must match ``endpoint``.  With ``free_time`` the start point is held at
    distance ``seed_radius`` from the equilibrium and ``T`` becomes an unknown;
    otherwise ``T`` is fixed and the start point moves freely in the plane.
    """

    equilibrium: Equilibrium
    side: str
    T: float
    endpoint: np.ndarray
    seed_radius: float = 1e-5
    pinned: tuple = (PSI, THETA)
    free_time: bool = True
    segments: int = 8

    def __post_init__(self):
        if self.side not in (STABLE, UNSTABLE):
            raise ValueError(f"side must be 'stable' or 'unstable', got {self.side!r}")
        if not 1e-7 <= self.seed_radius <= 1e-3:
            raise ValueError("seed_radius must lie in [1e-7, 1e-3]")
        if self.T <= 0:
            raise ValueError("T must be positive")
        if len(self.pinned) != 2:
            raise ValueError("exactly two end-point coordinates must be pinned")

    @property
    def frame(self) -> np.ndarray:
        """L_s for the unstable side, L_u for the stable side."""
        eq = self.equilibrium
        return _unit_rows(eq.stable_frame if self.side == UNSTABLE else eq.unstable_frame)

    @property
    def plane(self) -> np.ndarray:
        eq = self.equilibrium
        return eq.unstable_plane if self.side == UNSTABLE else eq.stable_plane

    @property
    def time_sign(self) -> float:
        return 1.0 if self.side == UNSTABLE else -1.0


@dataclass
class ManifoldOrbit:
    """One accepted orbit: shooting nodes, duration and boundary residuals."""

    side: str
    nodes: np.ndarray  # (m, 4) states at the segment starts
    T: float
    endpoint: np.ndarray
    residual: float
    equilibrium: Equilibrium
    cont_param: float = 0.0

    @property
    def start(self) -> np.ndarray:
        return self.nodes[0]

    @property
    def z(self) -> np.ndarray:
        return np.concatenate([self.nodes.ravel(), [self.T]])

    @property
    def time_sign(self) -> float:
        return 1.0 if self.side == UNSTABLE else -1.0

    def trajectory(self, flow: Optional[RodFlow] = None) -> DenseTrajectory:
        """Dense orbit from the start point over ``[0, T]`` or ``[0, -T]``."""
        flow = flow or RodFlow(self.equilibrium.params)
        return flow.trajectory(self.start, 0.0, self.time_sign * self.T)

    def boundary_residuals(self, frame) -> tuple:
        d0 = self.start - self.equilibrium.state
        return float(np.max(np.abs(_unit_rows(frame) @ d0))), float(np.linalg.norm(d0))


class _Shooting:
    """Residual and Jacobian of the multiple-shooting system."""

    def __init__(self, equilibrium: Equilibrium, side: str, segments: int, seed_radius: float,
                 flow: Optional[RodFlow] = None):
        self.eq = equilibrium
        self.side = side
        self.m = segments
        self.r = seed_radius
        self.sign = 1.0 if side == UNSTABLE else -1.0
        frame = equilibrium.stable_frame if side == UNSTABLE else equilibrium.unstable_frame
        self.frame = _unit_rows(frame)
        self.flow = flow or RodFlow(equilibrium.params, max_steps=SHOOT_STEPS)

    @property
    def size(self) -> int:
        return 4 * self.m + 1

    def evaluate(self, z, terms, free_time=True, T_fixed=None):
        m = self.m
        X = z[: 4 * m].reshape(m, 4)
        T = z[4 * m] if free_time else T_fixed
        if not T > 0:
            raise NoConvergence(f"orbit duration became non-positive ({T})")
        tau = self.sign * T / m
        ends, jacs, fends = [], [], []
        for i in range(m):
            e, J = self.flow.with_jacobian(X[i], 0.0, tau)
            ends.append(e)
            jacs.append(J)
            fends.append(vector_field_array(e, self.eq.params))
        ncol = 4 * m + (1 if free_time else 0)
        nrow = 2 + (1 if free_time else 0) + 4 * (m - 1) + len(terms)
        R = np.zeros(nrow)
        Jm = np.zeros((nrow, ncol))
        d0 = X[0] - self.eq.state
        R[0:2] = self.frame @ d0
        Jm[0:2, 0:4] = self.frame
        row = 2
        if free_time:
            R[2] = (d0 @ d0 - self.r**2) / (2 * self.r)
            Jm[2, 0:4] = d0 / self.r
            row = 3
        for i in range(m - 1):
            R[row:row + 4] = ends[i] - X[i + 1]
            Jm[row:row + 4, 4 * i:4 * i + 4] = jacs[i]
            Jm[row:row + 4, 4 * i + 4:4 * i + 8] = -np.eye(4)
            if free_time:
                Jm[row:row + 4, 4 * m] = fends[i] * self.sign / m
            row += 4
        e = ends[-1]
        for normal, target, periodic in terms:
            v = normal @ e - target
            if periodic:
                v = math.remainder(v, 2 * math.pi)
            R[row] = v
            Jm[row, 4 * (m - 1):4 * m] = normal @ jacs[-1]
            if free_time:
                Jm[row, 4 * m] = (normal @ fends[-1]) * self.sign / m
            row += 1
        return R, Jm, e

    def linear_guess(self, end_displacement, T):
        """Nodes of the linearised orbit whose end displacement is given."""
        A = self.eq.jacobian
        d_end = np.asarray(end_displacement, dtype=float)
        ts = self.sign * T * np.arange(self.m) / self.m
        d0 = expm(-A * self.sign * T) @ d_end
        nodes = np.array([self.eq.state + expm(A * t) @ d0 for t in ts])
        return nodes

    def orbit(self, z, residual, cont_param=0.0) -> ManifoldOrbit:
        m = self.m
        R, _, e = self.evaluate(z, [])
        return ManifoldOrbit(self.side, z[: 4 * m].reshape(m, 4).copy(), float(z[4 * m]), e,
                             float(residual), self.eq, cont_param)


def _newton(fun, z0, tol, max_iter=12):
    z = np.array(z0, dtype=float)
    last = math.inf
    first = None
    for _ in range(max_iter):
        R, Jm = fun(z)
        err = float(np.max(np.abs(R)))
        if err <= tol:
            return z, err
        first = err if first is None else first
        if err > 100 * first and err > 1e-6:
            raise NoConvergence(f"shooting Newton diverged (residual {err:.3e})")
        if not np.all(np.isfinite(Jm)):
            raise SingularJacobian("non-finite shooting Jacobian")
        try:
            dz = np.linalg.solve(Jm, -R)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(str(exc)) from exc
        z = z + dz
        last = err
    R, _ = fun(z)
    err = float(np.max(np.abs(R)))
    if err <= tol:
        return z, err
    raise NoConvergence(f"shooting Newton stalled at residual {err:.3e} (previous {last:.3e})")


def _linear_time(A, sign, d_end, radius, t_cap=200.0):
    """Time for the linear flow to carry a point at ``radius`` onto ``d_end``."""
    def f(T):
        return math.log(np.linalg.norm(expm(-A * sign * T) @ d_end) / radius)

    hi = 1.0
    while f(hi) > 0:
        hi *= 2
        if hi > t_cap:
            return None
    return brentq(f, 0.0, hi, xtol=1e-10)


def solve_manifold_bvp(setup: BvpSetup, guess: Optional[ManifoldOrbit] = None,
                       tol: float = BVP_TOL, flow: Optional[RodFlow] = None) -> ManifoldOrbit:
    """Solve the boundary value problem by multiple shooting and Newton.

    Without ``guess`` the start uses the linearised flow: the end displacement
    is projected onto the relevant eigenplane and pulled back over ``T``.
    """
    sh = _Shooting(setup.equilibrium, setup.side, setup.segments, setup.seed_radius, flow)
    eq = setup.equilibrium
    endpoint = np.asarray(setup.endpoint, dtype=float)
    terms = [(np.eye(4)[k], endpoint[k], False) for k in setup.pinned]
    if guess is not None:
        z0 = guess.z if setup.free_time else guess.nodes.ravel()
    else:
        plane = setup.plane
        d = endpoint - eq.state
        coef = np.linalg.lstsq(plane.T, d, rcond=None)[0]
        d_plane = plane.T @ coef
        if np.linalg.norm(d_plane) == 0:
            d_plane = np.zeros(4)
        T0 = setup.T
        if setup.free_time and np.linalg.norm(d_plane) > setup.seed_radius:
            T0 = _linear_time(eq.jacobian, sh.sign, d_plane, setup.seed_radius) or T0
        nodes = sh.linear_guess(d_plane, T0)
        if setup.free_time and np.linalg.norm(nodes[0] - eq.state) > 0:
            # rescale onto the seed circle, keeping the linear shape
            scale = setup.seed_radius / np.linalg.norm(nodes[0] - eq.state)
            nodes = eq.state + (nodes - eq.state) * scale
        z0 = nodes.ravel()
        if setup.free_time:
            z0 = np.concatenate([z0, [T0]])

    def fun(z):
        R, Jm, _ = sh.evaluate(z, terms, setup.free_time, setup.T)
        return R, Jm

    z, err = _newton(fun, z0, tol)
    if not setup.free_time:
        z = np.concatenate([z, [setup.T]])
    R, _, end = sh.evaluate(z, terms, True)
    m = setup.segments
    return ManifoldOrbit(setup.side, z[: 4 * m].reshape(m, 4).copy(), float(z[4 * m]), end, err, eq)


def _ray_direction(eq: Equilibrium, side: str, section: Section) -> np.ndarray:
    """Unit vector in the eigenplane lying in the section, crossing it the required way."""
    plane = eq.unstable_plane if side == UNSTABLE else eq.stable_plane
    n = section.normal_array
    a, b = n @ plane[0], n @ plane[1]
    v = -b * plane[0] + a * plane[1]
    if np.linalg.norm(v) == 0:
        raise ValueError("section normal is orthogonal to the eigenplane")
    v = v / np.linalg.norm(v)
    speed = n @ (eq.jacobian @ v)
    if section.direction != 0 and np.sign(speed) != section.direction:
        v = -v
    return v


def initial_orbit(equilibrium: Equilibrium, side: str, section: Section, seed_radius=1e-5,
                  T0=0.5, segments=8, tol=BVP_TOL, flow: Optional[RodFlow] = None) -> ManifoldOrbit:
    """Short orbit of the linearised flow ending on ``section``, corrected by Newton."""
    sh = _Shooting(equilibrium, side, segments, seed_radius, flow)
    v = _ray_direction(equilibrium, side, section)
    A = equilibrium.jacobian
    back = expm(-A * sh.sign * T0) @ v
    nodes = sh.linear_guess(v * seed_radius / np.linalg.norm(back), T0)
    z0 = np.concatenate([nodes.ravel(), [T0]])
    terms = [(section.normal_array, section.offset, section.periodic)]

    def fun(z):
        R, Jm, _ = sh.evaluate(z, terms)
        R = np.append(R, z[-1] - T0)
        row = np.zeros(Jm.shape[1])
        row[-1] = 1.0
        return R, np.vstack([Jm, row])

    z, err = _newton(fun, z0, tol)
    return sh.orbit(z, err)


@dataclass
class ManifoldSheet:
    """Continuation-ordered family of orbits on one manifold, all ending on ``section``."""

    side: str
    equilibrium: Equilibrium
    section: Section
    orbits: List[ManifoldOrbit] = field(default_factory=list)
    seed_radius: float = 1e-5
    segments: int = 8
    stall_reason: Optional[str] = None

    @property
    def endpoints(self) -> np.ndarray:
        return np.array([o.endpoint for o in self.orbits])

    @property
    def cont_params(self) -> np.ndarray:
        return np.array([o.cont_param for o in self.orbits])

    def energies(self) -> np.ndarray:
        p = self.equilibrium.params
        return np.array([hamiltonian(o.endpoint, p) for o in self.orbits])


def _null_vector(Jm, previous=None):
    _, _, vt = np.linalg.svd(Jm)
    t = vt[-1]
    if previous is not None and t @ previous < 0:
        t = -t
    return t / np.linalg.norm(t)


def continue_sheet(initial: ManifoldOrbit, section: Section, direction=1, steps=100,
                   ds=0.05, ds_min=1e-6, ds_max=0.5, max_end_step=0.02, max_time=math.inf,
                   tol=BVP_TOL, flow: Optional[RodFlow] = None, stop=None,
                   allow_stall=False) -> ManifoldSheet:
    """Pseudo-arclength continuation of orbits whose end point stays on ``section``.

    ``direction=+1`` continues towards longer orbits, i.e. outwards along the
    slice.  Steps are halved when Newton fails or the end point jumps by more
    than ``max_end_step``; :class:`StallOut` is raised if the step underflows,
    unless ``allow_stall`` is set, in which case the orbits found so far are
    returned with ``stall_reason`` filled in.  This happens in practice when
    the family runs into orbits grazing the pole ``sin(theta) = 0``.
    ``stop(orbit)`` may end the continuation early by returning True.
    """
    eq = initial.equilibrium
    m = initial.nodes.shape[0]
    r = float(np.linalg.norm(initial.start - eq.state))
    sh = _Shooting(eq, initial.side, m, r, flow)
    terms = [(section.normal_array, section.offset, section.periodic)]
    sheet = ManifoldSheet(initial.side, eq, section, [initial], r, m)

    z = initial.z
    R, Jm, end = sh.evaluate(z, terms)
    tangent = _null_vector(Jm)
    if tangent[-1] * direction < 0:
        tangent = -tangent
    s_param = initial.cont_param
    h = ds
    for _ in range(steps):
        stalled = False
        while True:
            if h < ds_min:
                msg = f"continuation step underflow after {len(sheet.orbits)} orbits"
                if not allow_stall:
                    raise StallOut(msg)
                stalled = True
                break
            z_pred = z + h * tangent

            def fun(zz, z_pred=z_pred, tangent=tangent):
                R, Jm, _ = sh.evaluate(zz, terms)
                R = np.append(R, tangent @ (zz - z_pred))
                return R, np.vstack([Jm, tangent])

            try:
                z_new, err = _newton(fun, z_pred, tol, max_iter=6)
                R, Jm, end_new = sh.evaluate(z_new, terms)
            except RodError:
                h *= 0.5
                continue
            if np.linalg.norm(end_new - end) > max_end_step:
                h *= 0.5
                continue
            break
        if stalled:
            sheet.stall_reason = msg
            break
        new_tangent = _null_vector(Jm, tangent)
        s_param += h
        orbit = ManifoldOrbit(initial.side, z_new[: 4 * m].reshape(m, 4).copy(), float(z_new[-1]),
                              end_new, err, eq, s_param)
        sheet.orbits.append(orbit)
        moved = np.linalg.norm(end_new - end)
        z, end, tangent = z_new, end_new, new_tangent
        # grow while the end point moves slowly
        if moved < 0.5 * max_end_step:
            h = min(ds_max, h * 1.5)
        if z[-1] > max_time or (stop is not None and stop(orbit)):
            break
    return sheet


def compute_sheet(params: Params, side: str, section: Section = Section.psi(), steps=100,
                  seed_radius=1e-5, segments=8, equilibrium: Optional[Equilibrium] = None,
                  **kwargs) -> ManifoldSheet:
    eq = equilibrium or refine_equilibrium(params)
    flow = RodFlow(params, max_steps=SHOOT_STEPS)
    init = initial_orbit(eq, side, section, seed_radius, segments=segments, flow=flow)
    kwargs.setdefault("allow_stall", True)
    return continue_sheet(init, section, steps=steps, flow=flow, **kwargs)


@dataclass
class SectionSlice:
    """Section crossings of a family of orbits.

    ``terminal`` marks crossings that are the end points of continuation
    orbits; in continuation order these trace the slice curve.
    """

    section: Section
    orbit_id: np.ndarray
    cont_param: np.ndarray
    states: np.ndarray
    t_cross: np.ndarray
    terminal: np.ndarray
    side: str = UNSTABLE
    equilibrium: Optional[Equilibrium] = None
    sheet: Optional[ManifoldSheet] = None

    def __len__(self):
        return len(self.t_cross)

    def curve(self) -> np.ndarray:
        """Terminal crossings in continuation order (the slice as a curve)."""
        sel = self.terminal
        order = np.argsort(self.cont_param[sel], kind="stable")
        return self.states[sel][order]

    def wrapped_states(self) -> np.ndarray:
        out = self.states.copy()
        out[:, PSI] = np.remainder(out[:, PSI] + math.pi, 2 * math.pi) - math.pi
        return out


def slice_sheet(sheet: ManifoldSheet, section: Optional[Section] = None,
                flow: Optional[RodFlow] = None) -> SectionSlice:
    """All crossings of ``section`` by the orbits of ``sheet`` (in forward-time orientation)."""
    section = section or sheet.section
    flow = flow or RodFlow(sheet.equilibrium.params)
    ids, params, states, times, term = [], [], [], [], []
    same = section == sheet.section
    p = sheet.equilibrium.params
    for k, orb in enumerate(sheet.orbits):
        t_end = orb.time_sign * orb.T
        if section.on_section(orb.start):
            speed = section.normal_array @ vector_field(orb.start, p)
            if section.direction == 0 or np.sign(speed) == section.direction:
                ids.append(k)
                params.append(orb.cont_param)
                states.append(orb.start)
                times.append(0.0)
                term.append(False)
        tc, yc = flow.crossings(orb.start, 0.0, t_end, section)
        for t, y in zip(tc, yc):
            if same and abs(t - t_end) < 1e-9:
                continue  # the terminal point is recorded below
            ids.append(k)
            params.append(orb.cont_param)
            states.append(y)
            times.append(t)
            term.append(False)
        if same:
            ids.append(k)
            params.append(orb.cont_param)
            states.append(orb.endpoint)
            times.append(t_end)
            term.append(True)
    states = np.array(states).reshape(-1, 4)
    return SectionSlice(section, np.array(ids, dtype=int), np.array(params), states,
                        np.array(times), np.array(term, dtype=bool), sheet.side, sheet.equilibrium,
                        sheet)


# ``slice`` is the public name; the builtin is only shadowed inside this module's namespace
slice = slice_sheet  # noqa: A001


def _densify(curve, coords, per_segment=16):
    """Spline through a polyline (chord-length parameter) resampled finely."""
    pts = curve[:, coords]
    keep = np.concatenate([[True], np.linalg.norm(np.diff(pts, axis=0), axis=1) > 1e-14])
    pts = pts[keep]
    if len(pts) < 4:
        return pts
    s = np.concatenate([[0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    spline = CubicSpline(s, pts, axis=0)
    fine = np.linspace(0, s[-1], (len(pts) - 1) * per_segment + 1)
    return spline(fine)


def _point_to_polyline(p, poly):
    """Distance from ``p`` to ``poly`` and whether the closest point is interior."""
    a = poly[:-1]
    b = poly[1:]
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    denom[denom == 0] = 1.0
    lam = np.clip(np.einsum("ij,ij->i", p - a, ab) / denom, 0.0, 1.0)
    proj = a + lam[:, None] * ab
    d = np.linalg.norm(proj - p, axis=1)
    i = int(np.argmin(d))
    interior = not ((i == 0 and lam[i] == 0.0) or (i == len(a) - 1 and lam[i] == 1.0))
    return float(d[i]), interior


SECTION_COORDS = {"psi": (THETA, P_THETA, P_PSI), "p_theta": (THETA, PSI, P_PSI)}


def _coords_for(section: Section):
    if section.name in SECTION_COORDS:
        return list(SECTION_COORDS[section.name])
    return [0, 1, 2, 3]


def _auto_window(a: SectionSlice, b: SectionSlice, coords, margin=0.02) -> float:
    """Distance from the equilibrium beyond which both slice curves are complete.

    Each continuation ends somewhere along its slice; past the larger of the
    two end distances both curves cover the same stretch of the manifolds.
    """
    eq = a.equilibrium.state[coords]
    ends = [np.linalg.norm(c.curve()[-1, coords] - eq) for c in (a, b)]
    return max(ends) + margin


def directed_distance(a: SectionSlice, b: SectionSlice, min_distance=None):
    """Largest distance from points of curve ``a`` to curve ``b`` over their overlap.

    Only points of ``a`` at least ``min_distance`` from the equilibrium whose
    nearest point on ``b`` is interior to ``b`` count.  ``None`` picks the
    distance with :func:`_auto_window`.  Returns ``(distance, points used)``.
    """
    coords = _coords_for(a.section)
    if min_distance is None:
        min_distance = _auto_window(a, b, coords)
    ca = a.curve()
    cb = b.curve()
    eq = a.equilibrium.state[coords]
    keep_b = np.linalg.norm(cb[:, coords] - eq, axis=1) >= min_distance
    if keep_b.sum() < 2:
        return 0.0, 0
    # densify every run of consecutive kept points separately
    runs = np.split(np.arange(len(cb)), np.nonzero(np.diff(keep_b.astype(int)))[0] + 1)
    polys = [_densify(cb[r], coords) for r in runs if keep_b[r[0]] and len(r) >= 2]
    worst, used = 0.0, 0
    for pt in ca[:, coords]:
        if np.linalg.norm(pt - eq) < min_distance:
            continue
        best = None
        for poly in polys:
            d, interior = _point_to_polyline(pt, poly)
            if best is None or d < best[0]:
                best = (d, interior)
        if best is not None and best[1]:
            worst = max(worst, best[0])
            used += 1
    return worst, used


def hausdorff_distance(ws: SectionSlice, wu: SectionSlice, min_distance=None) -> float:
    """Sampled Hausdorff distance between two slice curves over their common range."""
    coords = _coords_for(wu.section)
    if min_distance is None:
        min_distance = _auto_window(wu, ws, coords)
    d1, n1 = directed_distance(wu, ws, min_distance)
    d2, n2 = directed_distance(ws, wu, min_distance)
    if n1 + n2 == 0:
        raise NoIntersection("slices have no overlapping range")
    return max(d1, d2)


def splitting_gap(ws: SectionSlice, wu: SectionSlice, min_distance=None) -> float:
    """Largest separation of W^u from W^s on the section over their common range."""
    d, n = directed_distance(wu, ws, min_distance)
    if n == 0:
        raise NoIntersection("slices have no overlapping range")
    return d


def _segment_intersections(P, Q):
    """All crossings of 2D polylines P and Q as (i, j, lam_p, lam_q)."""
    out = []
    for i in range(len(P) - 1):
        p, r = P[i], P[i + 1] - P[i]
        q = Q[:-1]
        s = Q[1:] - Q[:-1]
        denom = r[0] * s[:, 1] - r[1] * s[:, 0]
        qp = q - p
        with np.errstate(divide="ignore", invalid="ignore"):
            lam = (qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0]) / denom
            mu = (qp[:, 0] * r[1] - qp[:, 1] * r[0]) / denom
        ok = (denom != 0) & (lam >= 0) & (lam < 1) & (mu >= 0) & (mu < 1)
        for j in np.nonzero(ok)[0]:
            out.append((i, int(j), float(lam[j]), float(mu[j])))
    return out


@dataclass
class HomoclinicOrbit:
    """Glued homoclinic orbit with the data of the manifold splitting at the crossing."""

    time: np.ndarray
    states: np.ndarray
    unstable: ManifoldOrbit
    stable: ManifoldOrbit
    crossing: np.ndarray
    gap: np.ndarray
    angle: float
    end_residuals: tuple
    transverse: bool

    @property
    def T_u(self) -> float:
        return self.unstable.T

    @property
    def T_s(self) -> float:
        return self.stable.T


def _endpoint_tangent(sh: _Shooting, z, terms):
    _, Jm, _ = sh.evaluate(z, terms)
    t = _null_vector(Jm)
    m = sh.m
    X = z[: 4 * m].reshape(m, 4)
    tau = sh.sign * z[-1] / m
    e, J = sh.flow.with_jacobian(X[-1], 0.0, tau)
    f = vector_field_array(e, sh.eq.params)
    return J @ t[4 * (m - 1):4 * m] + f * sh.sign / m * t[-1]


def _angle(u, v):
    c = abs(u @ v) / (np.linalg.norm(u) * np.linalg.norm(v))
    return math.acos(min(1.0, c))


def detect_homoclinic(ws: SectionSlice, wu: SectionSlice, p: Params,
                      stable_sheet: Optional[ManifoldSheet] = None,
                      unstable_sheet: Optional[ManifoldSheet] = None, select="farthest", exclude_radius=0.05,
                      angle_tol=ANGLE_TOL, tol=BVP_TOL, samples=2001) -> HomoclinicOrbit:
    """Refine a crossing of the W^s and W^u slices into a homoclinic orbit.

    The crossing is bracketed on the piecewise-linear slice curves in the
    section chart, the neighbouring orbits are interpolated to seed Newton on
    the joint shooting system (both families plus matching of the section
    chart coordinates), and the angle between the slice tangents at the
    solution decides transversality.  ``select`` picks the crossing farthest
    from (``"farthest"``) or nearest to (``"nearest"``) the equilibrium,
    ignoring those within ``exclude_radius`` of it.
    """
    stable_sheet = stable_sheet or ws.sheet
    unstable_sheet = unstable_sheet or wu.sheet
    if stable_sheet is None or unstable_sheet is None:
        raise ValueError("slices must come from manifold sheets")
    if ws.section != wu.section:
        raise ValueError("slices must be taken on the same section")
    if len(ws) == 0 or len(wu) == 0:
        raise NoIntersection("empty slice")
    eq = unstable_sheet.equilibrium
    e_u = unstable_sheet.energies()
    e_s = stable_sheet.energies()
    if abs(np.median(e_u) - np.median(e_s)) > 1e-8:
        raise ValueError("slices lie on different energy levels")
    section = wu.section
    chart = [c for c in _coords_for(section) if c != P_PSI][:2]
    cu_idx = np.nonzero(wu.terminal)[0][np.argsort(wu.cont_param[wu.terminal], kind="stable")]
    cs_idx = np.nonzero(ws.terminal)[0][np.argsort(ws.cont_param[ws.terminal], kind="stable")]
    U = wu.states[cu_idx][:, chart]
    S = ws.states[cs_idx][:, chart]
    hits = _segment_intersections(U, S)
    centre = eq.state[chart]
    cands = []
    for i, j, lu, ls in hits:
        pt = U[i] + lu * (U[i + 1] - U[i])
        dist = float(np.linalg.norm(pt - centre))
        if dist > exclude_radius:
            cands.append((dist, i, j, lu, ls, pt))
    if not cands:
        raise NoIntersection("the slice curves do not cross away from the equilibrium")
    cands.sort(key=lambda c: c[0])
    dist, i, j, lu, ls, pt = cands[-1] if select == "farthest" else cands[0]

    ou = [unstable_sheet.orbits[wu.orbit_id[cu_idx[i]]], unstable_sheet.orbits[wu.orbit_id[cu_idx[i + 1]]]]
    os_ = [stable_sheet.orbits[ws.orbit_id[cs_idx[j]]], stable_sheet.orbits[ws.orbit_id[cs_idx[j + 1]]]]
    zu0 = (1 - lu) * ou[0].z + lu * ou[1].z
    zs0 = (1 - ls) * os_[0].z + ls * os_[1].z
    xu = (1 - lu) * ou[0].endpoint + lu * ou[1].endpoint
    xs = (1 - ls) * os_[0].endpoint + ls * os_[1].endpoint
    gap = xu - xs

    flow = RodFlow(p, max_steps=SHOOT_STEPS)
    shu = _Shooting(eq, UNSTABLE, unstable_sheet.segments, unstable_sheet.seed_radius, flow)
    shs = _Shooting(eq, STABLE, stable_sheet.segments, stable_sheet.seed_radius, flow)
    terms = [(section.normal_array, section.offset, section.periodic)]
    nu_ = zu0.size

    def fun(z):
        Ru, Ju, eu = shu.evaluate(z[:nu_], terms)
        Rs, Js, es = shs.evaluate(z[nu_:], terms)
        # matching rows: d(end)/dz from the last-segment rows of the section term
        mu_ = shu.m
        Xu = z[:nu_][: 4 * mu_].reshape(mu_, 4)
        Xs = z[nu_:][: 4 * shs.m].reshape(shs.m, 4)
        _, Jeu = flow.with_jacobian(Xu[-1], 0.0, z[nu_ - 1] / mu_)
        _, Jes = flow.with_jacobian(Xs[-1], 0.0, -z[-1] / shs.m)
        fu = vector_field_array(eu, p)
        fs = vector_field_array(es, p)
        Rm = eu[chart] - es[chart]
        Jmatch = np.zeros((2, z.size))
        Jmatch[:, 4 * (mu_ - 1):4 * mu_] = Jeu[chart]
        Jmatch[:, nu_ - 1] = fu[chart] / mu_
        Jmatch[:, nu_ + 4 * (shs.m - 1):nu_ + 4 * shs.m] = -Jes[chart]
        Jmatch[:, -1] = fs[chart] / shs.m
        R = np.concatenate([Ru, Rs, Rm])
        Jm = np.zeros((R.size, z.size))
        Jm[: Ru.size, :nu_] = Ju
        Jm[Ru.size:Ru.size + Rs.size, nu_:] = Js
        Jm[Ru.size + Rs.size:] = Jmatch
        return R, Jm

    z, err = _newton(fun, np.concatenate([zu0, zs0]), tol, max_iter=15)
    zu, zs = z[:nu_], z[nu_:]
    orb_u = shu.orbit(zu, err)
    orb_s = shs.orbit(zs, err)
    tu = _endpoint_tangent(shu, zu, terms)
    ts = _endpoint_tangent(shs, zs, terms)
    coords = _coords_for(section)
    angle = _angle(tu[coords], ts[coords])

    traj_u = orb_u.trajectory(flow)
    traj_s = orb_s.trajectory(flow)
    tau_u = np.linspace(0.0, orb_u.T, samples)
    tau_s = np.linspace(0.0, -orb_s.T, samples)
    states_u = traj_u(tau_u)
    states_s = traj_s(tau_s)[::-1]
    time = np.concatenate([tau_u - orb_u.T, (tau_s[::-1] + orb_s.T)[1:]])
    states = np.vstack([states_u, states_s[1:]])
    res = (float(np.linalg.norm(states[0] - eq.state)), float(np.linalg.norm(states[-1] - eq.state)))
    result = HomoclinicOrbit(time, states, orb_u, orb_s, orb_u.endpoint, gap, angle, res,
                             angle > angle_tol)
    if angle <= angle_tol:
        raise TangencyDetected(f"slices meet at angle {angle:.3e} rad <= {angle_tol:g}", angle)
    return result


def complete_seed(theta, p_theta, energy, p: Params, psi=0.0):
    """State on the level ``H = energy`` over (theta, psi, p_theta), solving for p_psi.

    The larger root is taken, which is the one crossing ``psi = const`` forwards
    when the perturbation is small.
    """
    def g(pp):
        return hamiltonian((theta, psi, p_theta, pp), p) - energy

    s2 = math.sin(theta) ** 2
    lo = math.cos(theta) + p.eps * s2
    hi_lim = p.mu / (2 * p.nu) if p.nu > 0 else math.inf
    lo = min(lo, hi_lim - 1e-12)
    if g(lo) > 0:
        raise ValueError(f"energy {energy} is below the minimum over p_psi at theta={theta}")
    step = 0.1
    hi = lo + step
    while g(hi) < 0:
        step *= 2
        hi = lo + step
        if hi >= hi_lim:
            hi = hi_lim * (1 - 1e-15)
            if g(hi) < 0:
                raise ValueError("no p_psi solves the energy equation")
            break
    pp = brentq(g, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
    return np.array([theta, psi, p_theta, pp])


def poincare_map(p: Params, energy, section: Section, seeds, n_crossings, t_max=None,
                 bound=50.0, on_error="raise", energy_tol=1e-10) -> SectionSlice:
    """Iterate the section map from each seed, ``n_crossings`` crossings per seed.

    A seed is either a full state already on the section and the energy level,
    or a pair ``(theta, p_theta)`` completed on the ``psi`` section.
    """
    flow = RodFlow(p)
    ids, params, states, times = [], [], [], []
    t_max = t_max if t_max is not None else 400.0 * n_crossings
    for k, seed in enumerate(seeds):
        seed = np.asarray(seed, dtype=float)
        if seed.size == 2:
            seed = complete_seed(seed[0], seed[1], energy, p, psi=section.offset)
        if abs(hamiltonian(seed, p) - energy) > energy_tol:
            raise ValueError(f"seed {k} is off the energy level by {hamiltonian(seed, p) - energy:.3e}")
        if not section.on_section(seed):
            raise ValueError(f"seed {k} does not lie on the section")
        if np.max(np.abs(vector_field(seed, p))) < 1e-12:
            for _ in range(n_crossings):
                ids.append(k); params.append(k); states.append(seed); times.append(0.0)
            continue
        try:
            res = flow.run(seed, 0.0, t_max, section=section, max_cross=n_crossings, bound=bound)
        except RodError:
            if on_error == "raise":
                raise
            continue
        for t, y in zip(res.crossings_t, res.crossings_y):
            ids.append(k)
            params.append(k)
            states.append(y)
            times.append(t)
    states = np.array(states).reshape(-1, 4)
    return SectionSlice(section, np.array(ids, dtype=int), np.array(params, dtype=float), states,
                        np.array(times), np.zeros(len(times), dtype=bool))


def invariant_curve_residual(points, k=10) -> float:
    """Largest deviation of planar points from a locally fitted curve.

    Around each point its ``k`` nearest neighbours are put in principal axes
    and the normal offset is fitted by a quadratic in the tangential one; the
    residual of the point itself is recorded.  Points sampled from a smooth
    curve give residuals of order curvature times spacing cubed, points
    scattered over an area give residuals of the order of their spacing.
    """
    pts = np.asarray(points, dtype=float)
    if len(pts) < max(k, 4):
        raise ValueError("need at least k points")
    tree = cKDTree(pts)
    _, idx = tree.query(pts, k=k)
    worst = 0.0
    for i, nb in enumerate(idx):
        q = pts[nb]
        c = q.mean(axis=0)
        _, _, vt = np.linalg.svd(q - c)
        s_ = (q - c) @ vt[0]
        d_ = (q - c) @ vt[1]
        basis = np.column_stack([np.ones_like(s_), s_, s_**2])
        coef = np.linalg.lstsq(basis, d_, rcond=None)[0]
        worst = max(worst, abs(d_[0] - basis[0] @ coef))
    return float(worst)


def hull_area(points) -> float:
    pts = np.asarray(points, dtype=float)
    if len(pts) < 3:
        return 0.0
    return float(ConvexHull(pts).volume)
