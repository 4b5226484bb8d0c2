"""Compiled Dormand-Prince 8(5,3) integrator specialised to the rod vector field.

The step-size control, error norm and dense output follow the reference
DOP853 scheme (coefficients taken from scipy) so results agree with
:func:`magrod.numerics.integrate` to within the tolerances.  On top of the
plain integrator the kernel locates section crossings on the dense
interpolant and propagates a central-difference bundle for flow Jacobians.

Status codes returned by the kernels::

    0 finished    1 singular state    2 step underflow
    3 step budget 4 escaped bound     5 crossing budget reached
"""

import math

import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _dop

N_STAGES = _dop.N_STAGES
A = np.ascontiguousarray(_dop.A)
B = np.ascontiguousarray(_dop.B)
C = np.ascontiguousarray(_dop.C)
E3 = np.ascontiguousarray(_dop.E3)
E5 = np.ascontiguousarray(_dop.E5)
D = np.ascontiguousarray(_dop.D)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ERR_EXP = -1.0 / 8.0

OK, SINGULAR, UNDERFLOW, BUDGET, ESCAPED, CROSSED = 0, 1, 2, 3, 4, 5


def pack(p, tol_sing=1e-10):
    """Parameter vector consumed by the kernels."""
    return np.array([p.alpha, p.mu, p.nu, p.eps, p.gamma, tol_sing])


@njit(cache=True)
def rhs(x, par, out):
    a, mu, nu, eps, g, tol = par[0], par[1], par[2], par[3], par[4], par[5]
    theta, psi, pt, pp = x[0], x[1], x[2], x[3]
    st = math.sin(theta)
    rad = mu - 2.0 * nu * pp
    if not (abs(st) > tol) or rad < 0.0 or (rad == 0.0 and nu != 0.0):
        return 1
    ct = math.cos(theta)
    sp = math.sin(psi)
    cp = math.cos(psi)
    root = math.sqrt(rad)
    coupling = nu / root if nu != 0.0 else 0.0
    # (pp - cos)/sin and (1 - pp cos)/sin, cancellation-free on the cos > 0 side
    if ct > 0.0:
        half = math.tan(0.5 * theta)
        r1 = (pp - 1.0) / st + half
        r2 = (1.0 - pp) / st + pp * half
    else:
        r1 = (pp - ct) / st
        r2 = (1.0 - pp * ct) / st
    out[0] = pt
    out[1] = r1 / st - coupling * (1.0 + g * ct) * st * cp - g * nu / a * st * st * cp * cp - eps
    out[2] = (
        -r1 * r2 / st
        + a * st * (1.0 + g * ct)
        - (ct + g * (ct * ct - st * st)) * cp * root
        - g / a * st * ct * cp * cp * rad
    )
    out[3] = (1.0 + g * ct) * st * sp * root + g / a * st * st * cp * sp * rad
    for k in range(4):
        if not math.isfinite(out[k]):
            return 1
    return 0


@njit(cache=True)
def _stages(t, y, f, h, par, K, y_new, nst):
    """Fill K[0:nst] (K[0] = f) and write the 8th-order solution to y_new."""
    tmp = np.empty(4)
    for k in range(4):
        K[0, k] = f[k]
    for s in range(1, nst):
        for k in range(4):
            acc = 0.0
            for j in range(s):
                acc += A[s, j] * K[j, k]
            tmp[k] = y[k] + h * acc
        st = rhs(tmp, par, K[s])
        if st != 0:
            return st
    for k in range(4):
        acc = 0.0
        for j in range(nst):
            acc += B[j] * K[j, k]
        y_new[k] = y[k] + h * acc
    return 0


@njit(cache=True)
def _error_norm(K, h, scale):
    e5 = 0.0
    e3 = 0.0
    for k in range(4):
        a5 = 0.0
        a3 = 0.0
        for j in range(N_STAGES + 1):
            a5 += K[j, k] * E5[j]
            a3 += K[j, k] * E3[j]
        e5 += (a5 / scale[k]) ** 2
        e3 += (a3 / scale[k]) ** 2
    if e5 == 0.0 and e3 == 0.0:
        return 0.0
    return abs(h) * e5 / math.sqrt((e5 + 0.01 * e3) * 4.0)


@njit(cache=True)
def _dense(t_old, h, y_old, y_new, f_new, K, par, F):
    """Seventh-degree interpolant coefficients for the step just taken."""
    tmp = np.empty(4)
    for s in range(N_STAGES + 1, 16):
        for k in range(4):
            acc = 0.0
            for j in range(s):
                acc += A[s, j] * K[j, k]
            tmp[k] = y_old[k] + h * acc
        st = rhs(tmp, par, K[s])
        if st != 0:
            return st
    for k in range(4):
        dy = y_new[k] - y_old[k]
        F[0, k] = dy
        F[1, k] = h * K[0, k] - dy
        F[2, k] = 2.0 * dy - h * (f_new[k] + K[0, k])
        for r in range(4):
            acc = 0.0
            for j in range(16):
                acc += D[r, j] * K[j, k]
            F[3 + r, k] = h * acc
    return 0


@njit(cache=True)
def dense_eval(F, y_old, x, out):
    for k in range(4):
        out[k] = 0.0
    for i in range(7):
        r = 6 - i
        for k in range(4):
            out[k] += F[r, k]
            if i % 2 == 0:
                out[k] *= x
            else:
                out[k] *= 1.0 - x
    for k in range(4):
        out[k] += y_old[k]


@njit(cache=True)
def _rms(v, scale):
    acc = 0.0
    for k in range(4):
        acc += (v[k] / scale[k]) ** 2
    return math.sqrt(acc / 4.0)


@njit(cache=True)
def _initial_step(t0, y0, f0, direction, par, rtol, atol):
    scale = np.empty(4)
    for k in range(4):
        scale[k] = atol + abs(y0[k]) * rtol
    d0 = _rms(y0, scale)
    d1 = _rms(f0, scale)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    y1 = np.empty(4)
    for k in range(4):
        y1[k] = y0[k] + h0 * direction * f0[k]
    f1 = np.empty(4)
    if rhs(y1, par, f1) != 0:
        return h0
    diff = np.empty(4)
    for k in range(4):
        diff[k] = f1[k] - f0[k]
    d2 = _rms(diff, scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 8.0)
    return min(100.0 * h0, h1)


@njit(cache=True)
def _section_value(y, normal, offset):
    acc = -offset
    for k in range(4):
        acc += normal[k] * y[k]
    return acc


@njit(cache=True)
def integrate(y0, t0, t1, par, rtol, atol, max_steps, dense, section, normal, offset, periodic,
              direction, max_cross, bound, max_step):
    """Integrate from t0 to t1, optionally recording dense output and crossings.

    A crossing is a root of ``normal . y - offset - 2 pi k`` (integer ``k`` only
    when ``periodic``) passed in the requested ``direction`` (+1, -1 or 0 for
    both), measured in forward physical time.  Integration stops after
    ``max_cross`` crossings when ``max_cross > 0``.
    """
    sgn = 1.0 if t1 >= t0 else -1.0
    nrec = max_steps + 1 if dense else 1
    ts = np.empty(nrec)
    ys = np.empty((nrec, 4))
    Fs = np.empty((nrec if dense else 1, 7, 4))
    cap = max_cross if max_cross > 0 else 64
    ct = np.empty(cap)
    cy = np.empty((cap, 4))
    ncross = 0
    K = np.empty((16, 4))
    F = np.empty((7, 4))
    y = y0.copy()
    f = np.empty(4)
    y_new = np.empty(4)
    f_new = np.empty(4)
    scale = np.empty(4)
    tmp = np.empty(4)
    t = t0
    ts[0] = t0
    ys[0] = y
    if rhs(y, par, f) != 0:
        return SINGULAR, t, y, 0, ts, ys, Fs, ct, cy, ncross
    if t1 == t0:
        return OK, t, y, 0, ts, ys, Fs, ct, cy, ncross
    h_abs = _initial_step(t0, y, f, sgn, par, rtol, atol)
    nsteps = 0
    status = OK
    while sgn * (t1 - t) > 0.0:
        if nsteps >= max_steps:
            status = BUDGET
            break
        min_step = 10.0 * abs(np.nextafter(t, t + sgn) - t)
        if h_abs > max_step:
            h_abs = max_step
        if h_abs < min_step:
            h_abs = min_step
        rejected = False
        accepted = False
        while not accepted:
            if h_abs < min_step:
                status = UNDERFLOW
                break
            h = h_abs * sgn
            t_new = t + h
            if sgn * (t_new - t1) > 0.0:
                t_new = t1
            h = t_new - t
            h_abs = abs(h)
            st = _stages(t, y, f, h, par, K, y_new, N_STAGES)
            if st == 0:
                st = rhs(y_new, par, f_new)
            if st != 0:
                # a stage left the domain: retry with a much smaller step
                h_abs *= 0.25
                rejected = True
                if h_abs < min_step:
                    status = SINGULAR
                    break
                continue
            for k in range(4):
                K[N_STAGES, k] = f_new[k]
                scale[k] = atol + max(abs(y[k]), abs(y_new[k])) * rtol
            err = _error_norm(K, h, scale)
            if err < 1.0:
                if err == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = min(MAX_FACTOR, SAFETY * err ** ERR_EXP)
                if rejected:
                    factor = min(1.0, factor)
                h_abs *= factor
                accepted = True
            else:
                h_abs *= max(MIN_FACTOR, SAFETY * err ** ERR_EXP)
                rejected = True
        if status != OK:
            break
        need_dense = dense
        g_old = 0.0
        g_new = 0.0
        lo_k = 0
        hi_k = -1
        if section:
            g_old = _section_value(y, normal, offset)
            g_new = _section_value(y_new, normal, offset)
            u0 = g_old / (2.0 * math.pi) if periodic else g_old
            u1 = g_new / (2.0 * math.pi) if periodic else g_new
            # levels whose root lies in (t, t_new]
            if u1 > u0:
                lo_k = int(math.floor(u0)) + 1
                hi_k = int(math.floor(u1))
            elif u1 < u0:
                lo_k = int(math.ceil(u1))
                hi_k = int(math.ceil(u0)) - 1
            if not periodic:
                lo_k = max(lo_k, 0)
                hi_k = min(hi_k, 0)
            if hi_k >= lo_k:
                need_dense = True
        if need_dense:
            st = _dense(t, h, y, y_new, f_new, K, par, F)
            if st != 0:
                status = SINGULAR
                break
        if dense:
            Fs[nsteps] = F
        stop = False
        if section and hi_k >= lo_k:
            # forward-time orientation of the crossing
            fwd = 1.0 if h > 0 else -1.0
            kk_range = hi_k - lo_k + 1
            for idx in range(kk_range):
                kk = lo_k + idx if g_new >= g_old else hi_k - idx
                level = 2.0 * math.pi * kk if periodic else 0.0
                a0 = g_old - level
                a1 = g_new - level
                orient = (a1 - a0) * fwd
                if direction > 0 and orient <= 0.0:
                    continue
                if direction < 0 and orient >= 0.0:
                    continue
                # Illinois regula falsi on the interpolant
                xa, xb = 0.0, 1.0
                fa, fb = a0, a1
                side = 0
                xm = 0.0
                for _ in range(200):
                    if fb == fa:
                        xm = 0.5 * (xa + xb)
                    else:
                        xm = (xa * fb - xb * fa) / (fb - fa)
                    if not (xm > xa and xm < xb) and not (xm < xa and xm > xb):
                        xm = 0.5 * (xa + xb)
                    dense_eval(F, y, xm, tmp)
                    fm = _section_value(tmp, normal, offset) - level
                    if fm == 0.0 or abs(xb - xa) * abs(h) < 1e-15:
                        break
                    if (fm > 0.0) == (fb > 0.0):
                        xb, fb = xm, fm
                        if side == 1:
                            fa *= 0.5
                        side = 1
                    else:
                        xa, fa = xm, fm
                        if side == -1:
                            fb *= 0.5
                        side = -1
                    if abs(xb - xa) * abs(h) < 1e-13:
                        break
                dense_eval(F, y, xm, tmp)
                if ncross >= cap:
                    # grow storage
                    ct2 = np.empty(2 * cap)
                    cy2 = np.empty((2 * cap, 4))
                    ct2[:cap] = ct
                    cy2[:cap] = cy
                    ct = ct2
                    cy = cy2
                    cap = 2 * cap
                ct[ncross] = t + xm * h
                cy[ncross] = tmp
                ncross += 1
                if max_cross > 0 and ncross >= max_cross:
                    stop = True
                    break
        t = t_new
        nsteps += 1
        for k in range(4):
            y[k] = y_new[k]
            f[k] = f_new[k]
        if dense:
            ts[nsteps] = t
            ys[nsteps] = y
        if bound > 0.0:
            nrm = 0.0
            for k in range(4):
                if k != 1:
                    nrm += y[k] * y[k]
            if math.sqrt(nrm) > bound:
                status = ESCAPED
                break
        if stop:
            status = CROSSED
            break
    return status, t, y, nsteps, ts, ys, Fs, ct, cy, ncross


@njit(cache=True)
def flow_with_jacobian(y0, t0, t1, par, rtol, atol, max_steps, fd):
    """End state and flow-map Jacobian via a central-difference bundle.

    The eight perturbed copies reuse the step sequence chosen for the base
    orbit, so the differences are those of one smooth discrete map.
    """
    sgn = 1.0 if t1 >= t0 else -1.0
    K = np.empty((16, 4))
    Kb = np.empty((16, 4))
    y = y0.copy()
    f = np.empty(4)
    y_new = np.empty(4)
    f_new = np.empty(4)
    scale = np.empty(4)
    bundle = np.empty((8, 4))
    bf = np.empty((8, 4))
    b_new = np.empty(4)
    jac = np.zeros((4, 4))
    for c in range(8):
        for k in range(4):
            bundle[c, k] = y0[k]
        bundle[c, c // 2] += fd if c % 2 == 0 else -fd
        if rhs(bundle[c], par, bf[c]) != 0:
            return SINGULAR, t0, y, jac
    t = t0
    if rhs(y, par, f) != 0:
        return SINGULAR, t, y, jac
    if t1 == t0:
        for k in range(4):
            jac[k, k] = 1.0
        return OK, t, y, jac
    h_abs = _initial_step(t0, y, f, sgn, par, rtol, atol)
    nsteps = 0
    while sgn * (t1 - t) > 0.0:
        if nsteps >= max_steps:
            return BUDGET, t, y, jac
        min_step = 10.0 * abs(np.nextafter(t, t + sgn) - t)
        if h_abs < min_step:
            h_abs = min_step
        rejected = False
        accepted = False
        while not accepted:
            if h_abs < min_step:
                return UNDERFLOW, t, y, jac
            h = h_abs * sgn
            t_new = t + h
            if sgn * (t_new - t1) > 0.0:
                t_new = t1
            h = t_new - t
            h_abs = abs(h)
            st = _stages(t, y, f, h, par, K, y_new, N_STAGES)
            if st == 0:
                st = rhs(y_new, par, f_new)
            if st != 0:
                h_abs *= 0.25
                rejected = True
                if h_abs < min_step:
                    return SINGULAR, t, y, jac
                continue
            for k in range(4):
                K[N_STAGES, k] = f_new[k]
                scale[k] = atol + max(abs(y[k]), abs(y_new[k])) * rtol
            err = _error_norm(K, h, scale)
            if err < 1.0:
                if err == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = min(MAX_FACTOR, SAFETY * err ** ERR_EXP)
                if rejected:
                    factor = min(1.0, factor)
                h_abs *= factor
                accepted = True
            else:
                h_abs *= max(MIN_FACTOR, SAFETY * err ** ERR_EXP)
                rejected = True
        for c in range(8):
            st = _stages(t, bundle[c], bf[c], h, par, Kb, b_new, N_STAGES)
            if st == 0:
                st = rhs(b_new, par, bf[c])
            if st != 0:
                return SINGULAR, t, y, jac
            for k in range(4):
                bundle[c, k] = b_new[k]
        t = t_new
        nsteps += 1
        for k in range(4):
            y[k] = y_new[k]
            f[k] = f_new[k]
    for j in range(4):
        for k in range(4):
            jac[k, j] = (bundle[2 * j, k] - bundle[2 * j + 1, k]) / (2.0 * fd)
    return OK, t, y, jac
