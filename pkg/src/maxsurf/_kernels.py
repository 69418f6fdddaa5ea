"""Jitted inner stepping loops for the built-in 1d scenarios.

These mirror the numpy reference engine in flow.py operation for operation
(same stencils, same projection, same per-step records); tests assert the
two paths agree to near machine precision.  Only built-in profiles are
compiled in -- custom callables always take the numpy path.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    available = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    available = False

    def njit(*a, **k):
        def wrap(f):
            return f

        return wrap


# profile codes: rotational 0=cylinder(R) 1=pseudosphere(A,B) 2=sine_tube(a,b,w)
# planar 10=trumpet
PROFILE_CODES = {"cylinder": 0, "pseudosphere": 1, "sine_tube": 2, "trumpet": 10}

NREC = 17
(_T, _SUP_V, _SUP_VHAT, _SUP_H, _VOL, _IH2, _OSC, _UMIN, _UMAX, _BLO, _BHI,
 _RES_HMU, _RES_VMU, _GRAD_V, _H2_INEQ, _ASIG, _GAP) = range(NREC)

_STATUS_CHUNK, _STATUS_GUARD, _STATUS_CONV, _STATUS_TEND, _STATUS_DTUF = 0, 1, 2, 3, 4


@njit(cache=True, nogil=True)
def _rot_f(code, p, z):
    if code == 0:
        return p[0], 0.0, 0.0
    if code == 1:
        A, B = p[0], p[1]
        f = np.sqrt(A * A + (z + B) ** 2)
        return f, (z + B) / f, A * A / f**3
    a, b, w = p[0], p[1], p[2]
    return (a + b * np.sin(w * z), b * w * np.cos(w * z),
            -b * w * w * np.sin(w * z))


@njit(cache=True, nogil=True)
def _planar_s(code, p, x):
    # code 10: trumpet y = log sinh x
    sh = np.sinh(x)
    return np.log(sh), np.cosh(x) / sh, -1.0 / (sh * sh)


@njit(cache=True, nogil=True)
def _newton_planar_nb(code, p, xb, ub, slope):
    xi = xb
    for _ in range(12):
        ax = abs(xi)
        s, ds, _ = _planar_s(code, p, ax)
        phi = ub + slope * (xi - xb) - s
        sgn = 1.0 if xi > 0 else -1.0
        dphi = slope - sgn * ds
        xi_new = xi - phi / dphi
        if abs(xi_new - xi) < 1e-14 * max(1.0, abs(xi)):
            xi = xi_new
            break
        xi = xi_new
    s, _, _ = _planar_s(code, p, abs(xi))
    if abs(ub + slope * (xi - xb) - s) >= 1e-9:
        return xi, np.nan
    return xi, slope * (xi - xb)


@njit(cache=True, nogil=True)
def _newton_rot_nb(code, p, rb, ub, slope):
    ri = rb
    for _ in range(12):
        z = ub + slope * (ri - rb)
        f, df, _ = _rot_f(code, p, z)
        phi = ri - f
        dphi = 1.0 - df * slope
        ri_new = ri - phi / dphi
        if abs(ri_new - ri) < 1e-14 * max(1.0, abs(ri)):
            ri = ri_new
            break
        ri = ri_new
    f, _, _ = _rot_f(code, p, ub + slope * (ri - rb))
    if abs(ri - f) >= 1e-9:
        return ri, np.nan
    return ri, slope * (ri - rb)


@njit(cache=True, nogil=True)
def run_curve1d(u, bpos, tarr, code, p, cfl, eps_guard, h_stop, t_end, has_tend,
                max_steps_chunk, stride, k0, rec, snaps, snap_t, snap_b, snap_k,
                ux, uxx, m, rhs, H, v, work):
    """Advance up to max_steps_chunk steps; returns (nrec, nsnap, status, k)."""
    n = u.shape[0]
    nrec = 0
    nsnap = 0
    k = k0
    t = tarr[0]
    xl, xr = bpos[0], bpos[1]
    status = _STATUS_CHUNK
    for _it in range(max_steps_chunk):
        h = (xr - xl) / (n - 1)
        _, dsR, d2sR = _planar_s(code, p, xr)
        _, dsL, d2sL = _planar_s(code, p, abs(xl))
        slope_r = 1.0 / dsR
        slope_l = -1.0 / dsL
        for i in range(1, n - 1):
            ux[i] = (u[i + 1] - u[i - 1]) / (2.0 * h)
        ux[0] = slope_l
        ux[n - 1] = slope_r
        for i in range(1, n - 1):
            uxx[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h)
        uxx[0] = (2.0 * u[1] - 2.0 * u[0] - 2.0 * h * slope_l) / (h * h)
        uxx[n - 1] = (2.0 * u[n - 2] - 2.0 * u[n - 1] + 2.0 * h * slope_r) / (h * h)
        m_min = 1e300
        for i in range(n):
            m[i] = 1.0 - ux[i] * ux[i]
            if m[i] < m_min:
                m_min = m[i]
            rhs[i] = uxx[i] / m[i]
        uxx_l2 = (-3.5 * u[0] + 4.0 * u[1] - 0.5 * u[2] - 3.0 * h * slope_l) / (h * h)
        uxx_r2 = (-3.5 * u[n - 1] + 4.0 * u[n - 2] - 0.5 * u[n - 3] + 3.0 * h * slope_r) / (h * h)
        guard = m_min < eps_guard
        # per-step record of the pre-step state (also the trip record)
        sup_v = -1e300
        sup_vh = -1e300
        sup_H = -1e300
        vol = 0.0
        ih2 = 0.0
        umin = 1e300
        umax = -1e300
        for i in range(n):
            wi = np.sqrt(m[i])
            vh = 1.0 / wi
            if i == 0:
                Hi = vh * uxx_l2 / m[0]
            elif i == n - 1:
                Hi = vh * uxx_r2 / m[n - 1]
            else:
                Hi = vh * rhs[i]
            H[i] = Hi
            x = 0.5 * (xl + xr) + (-1.0 + 2.0 * i / (n - 1)) * 0.5 * (xr - xl)
            ax = abs(x)
            if ax < 1e-12:
                Vx = 0.0
                Vt = 1.0
            else:
                _, dsx, _ = _planar_s(code, p, ax)
                wv = np.sqrt(dsx * dsx - 1.0)
                Vx = (1.0 if x > 0 else -1.0) / wv
                Vt = dsx / wv
            v[i] = (Vt - Vx * ux[i]) / wi
            wq = h if 0 < i < n - 1 else 0.5 * h
            dV = wi * wq
            vol += dV
            ih2 += Hi * Hi * dV
            if v[i] > sup_v:
                sup_v = v[i]
            if vh > sup_vh:
                sup_vh = vh
            if abs(Hi) > sup_H:
                sup_H = abs(Hi)
            if u[i] < umin:
                umin = u[i]
            if u[i] > umax:
                umax = u[i]
        res_hmu = -1e300
        res_vmu = -1e300
        grad_v_max = -1e300
        h2_ineq_max = -1e300
        asig_min = 1e300
        for side in range(2):
            if side == 0:
                f1, f2, f3 = H[1], H[2], H[3]
                q1, q2, q3 = H[1] * H[1], H[2] * H[2], H[3] * H[3]
                dv = -(3.0 * v[0] - 4.0 * v[1] + v[2]) / (2.0 * h)
                dv2 = (v[0] - v[1]) / h
                inv_w = 1.0 / np.sqrt(m[0])
                vb = v[0]
                d2s = d2sL
                dsb = dsL
            else:
                f1, f2, f3 = H[n - 2], H[n - 3], H[n - 4]
                q1, q2, q3 = H[n - 2] ** 2, H[n - 3] ** 2, H[n - 4] ** 2
                dv = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h)
                dv2 = (v[n - 1] - v[n - 2]) / h
                inv_w = 1.0 / np.sqrt(m[n - 1])
                vb = v[n - 1]
                d2s = d2sR
                dsb = dsR
            # rim value and outward derivative extrapolated from clean nodes
            Hb = 3.0 * f1 - 3.0 * f2 + f3
            dH = (2.5 * f1 - 4.0 * f2 + 1.5 * f3) / h
            dH2 = (2.5 * q1 - 4.0 * q2 + 1.5 * q3) / h
            a_vv = d2s / (dsb * dsb - 1.0) ** 1.5
            a_nn = vb * vb * a_vv
            rh = abs(dH * inv_w + Hb * a_nn)
            rv = abs(dv * inv_w + vb * (a_nn - a_vv))
            gv = dv2 * inv_w
            h2i = dH2 * inv_w + Hb * Hb * a_vv
            if rh > res_hmu:
                res_hmu = rh
            if rv > res_vmu:
                res_vmu = rv
            if gv > grad_v_max:
                grad_v_max = gv
            if h2i > h2_ineq_max:
                h2_ineq_max = h2i
            if a_nn < asig_min:
                asig_min = a_nn
        if k % stride == 0 or guard:
            for i in range(n):
                snaps[nsnap, i] = u[i]
            snap_t[nsnap] = t
            snap_b[nsnap, 0] = xl
            snap_b[nsnap, 1] = xr
            snap_k[nsnap] = k
            nsnap += 1
        rec[nrec, _T] = t
        rec[nrec, _SUP_V] = sup_v
        rec[nrec, _SUP_VHAT] = sup_vh
        rec[nrec, _SUP_H] = sup_H
        rec[nrec, _VOL] = vol
        rec[nrec, _IH2] = ih2
        rec[nrec, _OSC] = umax - umin
        rec[nrec, _UMIN] = umin
        rec[nrec, _UMAX] = umax
        rec[nrec, _BLO] = xl
        rec[nrec, _BHI] = xr
        rec[nrec, _RES_HMU] = res_hmu
        rec[nrec, _RES_VMU] = res_vmu
        rec[nrec, _GRAD_V] = grad_v_max
        rec[nrec, _H2_INEQ] = h2_ineq_max
        rec[nrec, _ASIG] = asig_min
        rec[nrec, _GAP] = np.nan
        nrec += 1
        if guard:
            status = _STATUS_GUARD
            break
        xdot_r = (uxx_r2 / m[n - 1]) * dsR / (dsR * dsR - 1.0)
        xdot_l = -(uxx_l2 / m[0]) * dsL / (dsL * dsL - 1.0)
        dt = cfl * h * h * m_min
        if has_tend and t + dt > t_end:
            dt = t_end - t
        if dt < 1e-16 * max(1.0, abs(t)):
            status = _STATUS_DTUF
            break
        for i in range(n):
            s_ref = -1.0 + 2.0 * i / (n - 1)
            wvel = 0.5 * (xdot_l + xdot_r) + s_ref * 0.5 * (xdot_r - xdot_l)
            work[i] = u[i] + dt * (rhs[i] + wvel * ux[i])
        xl_new = xl + dt * xdot_l
        xr_new = xr + dt * xdot_r
        _, dsRn, _ = _planar_s(code, p, xr_new)
        _, dsLn, _ = _planar_s(code, p, abs(xl_new))
        slope_rn = 1.0 / dsRn
        slope_ln = -1.0 / dsLn
        xr_p, du_r = _newton_planar_nb(code, p, xr_new, work[n - 1], slope_rn)
        xl_p, du_l = _newton_planar_nb(code, p, xl_new, work[0], slope_ln)
        if np.isnan(du_r) or np.isnan(du_l):
            status = _STATUS_DTUF
            break
        h_new = (xr_new - xl_new) / (n - 1)
        for i in range(n):
            s_ref = -1.0 + 2.0 * i / (n - 1)
            dsh = 0.5 * ((xl_p - xl_new) + (xr_p - xr_new)) + s_ref * 0.5 * ((xr_p - xr_new) - (xl_p - xl_new))
            if i == 0:
                uxn = slope_ln
            elif i == n - 1:
                uxn = slope_rn
            else:
                uxn = (work[i + 1] - work[i - 1]) / (2.0 * h_new)
            u[i] = work[i] + dsh * uxn
        sP, _, _ = _planar_s(code, p, abs(xl_p))
        u[0] = sP
        sP, _, _ = _planar_s(code, p, abs(xr_p))
        u[n - 1] = sP
        xl, xr = xl_p, xr_p
        t += dt
        k += 1
        if h_stop > 0.0 and sup_H < h_stop:
            status = _STATUS_CONV
            break
        if has_tend and t >= t_end - 1e-14 * max(1.0, abs(t_end)):
            status = _STATUS_TEND
            break
    tarr[0] = t
    bpos[0] = xl
    bpos[1] = xr
    return nrec, nsnap, status, k


@njit(cache=True, nogil=True)
def run_radial2d(u, bpos, tarr, code, p, cfl, eps_guard, h_stop, t_end, has_tend,
                 max_steps_chunk, stride, k0, rec, snaps, snap_t, snap_b, snap_k,
                 ux, uxx, m, rhs, H, v, work):
    n = u.shape[0]
    nrec = 0
    nsnap = 0
    k = k0
    t = tarr[0]
    rb = bpos[0]
    status = _STATUS_CHUNK
    twopi = 2.0 * np.pi
    for _it in range(max_steps_chunk):
        h = rb / (n - 1)
        fb, dfb, d2fb = _rot_f(code, p, u[n - 1])
        slope_b = dfb
        for i in range(1, n - 1):
            ux[i] = (u[i + 1] - u[i - 1]) / (2.0 * h)
        ux[0] = 0.0
        ux[n - 1] = slope_b
        for i in range(1, n - 1):
            uxx[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h)
        uxx[0] = 2.0 * (u[1] - u[0]) / (h * h)
        uxx[n - 1] = (2.0 * u[n - 2] - 2.0 * u[n - 1] + 2.0 * h * slope_b) / (h * h)
        m_min = 1e300
        for i in range(n):
            m[i] = 1.0 - ux[i] * ux[i]
            if m[i] < m_min:
                m_min = m[i]
        for i in range(1, n):
            rhs[i] = uxx[i] / m[i] + ux[i] / (i * h)
        rhs[0] = uxx[0] * (1.0 / m[0] + 1.0)
        uxx_b2 = (-3.5 * u[n - 1] + 4.0 * u[n - 2] - 0.5 * u[n - 3] + 3.0 * h * slope_b) / (h * h)
        rhs_b2 = uxx_b2 / m[n - 1] + ux[n - 1] / rb
        guard = m_min < eps_guard
        sup_v = -1e300
        sup_vh = -1e300
        sup_H = -1e300
        vol = 0.0
        ih2 = 0.0
        umin = 1e300
        umax = -1e300
        for i in range(n):
            wi = np.sqrt(m[i])
            vh = 1.0 / wi
            Hi = vh * rhs_b2 if i == n - 1 else vh * rhs[i]
            H[i] = Hi
            _, dfz, _ = _rot_f(code, p, u[i])
            invw = 1.0 / np.sqrt(1.0 - dfz * dfz)
            v[i] = (1.0 - dfz * ux[i]) * invw / wi
            wq = h if 0 < i < n - 1 else 0.5 * h
            dV = twopi * (i * h) * wi * wq
            vol += dV
            ih2 += Hi * Hi * dV
            if v[i] > sup_v:
                sup_v = v[i]
            if vh > sup_vh:
                sup_vh = vh
            if abs(Hi) > sup_H:
                sup_H = abs(Hi)
            if u[i] < umin:
                umin = u[i]
            if u[i] > umax:
                umax = u[i]
        f1, f2, f3 = H[n - 2], H[n - 3], H[n - 4]
        Hb = 3.0 * f1 - 3.0 * f2 + f3
        dH = (2.5 * f1 - 4.0 * f2 + 1.5 * f3) / h
        dH2 = (2.5 * f1 * f1 - 4.0 * f2 * f2 + 1.5 * f3 * f3) / h
        dv = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h)
        dv2 = (v[n - 1] - v[n - 2]) / h
        inv_w = 1.0 / np.sqrt(m[n - 1])
        wb = np.sqrt(1.0 - dfb * dfb)
        a_vv = -d2fb / wb**3
        a_ww = 1.0 / (fb * wb)
        vb = v[n - 1]
        a_nn = vb * vb * a_vv + (vb * vb - 1.0) * a_ww
        res_hmu = abs(dH * inv_w + Hb * a_nn)
        res_vmu = abs(dv * inv_w + vb * (a_nn - a_vv))
        grad_v_max = dv2 * inv_w
        h2_ineq_max = dH2 * inv_w + Hb * Hb * a_vv
        asig_min = a_nn
        if k % stride == 0 or guard:
            for i in range(n):
                snaps[nsnap, i] = u[i]
            snap_t[nsnap] = t
            snap_b[nsnap, 0] = rb
            snap_b[nsnap, 1] = rb
            snap_k[nsnap] = k
            nsnap += 1
        rec[nrec, _T] = t
        rec[nrec, _SUP_V] = sup_v
        rec[nrec, _SUP_VHAT] = sup_vh
        rec[nrec, _SUP_H] = sup_H
        rec[nrec, _VOL] = vol
        rec[nrec, _IH2] = ih2
        rec[nrec, _OSC] = umax - umin
        rec[nrec, _UMIN] = umin
        rec[nrec, _UMAX] = umax
        rec[nrec, _BLO] = 0.0
        rec[nrec, _BHI] = rb
        rec[nrec, _RES_HMU] = res_hmu
        rec[nrec, _RES_VMU] = res_vmu
        rec[nrec, _GRAD_V] = grad_v_max
        rec[nrec, _H2_INEQ] = h2_ineq_max
        rec[nrec, _ASIG] = asig_min
        rec[nrec, _GAP] = np.nan
        nrec += 1
        if guard:
            status = _STATUS_GUARD
            break
        rdot = dfb * rhs_b2 / (1.0 - dfb * dfb)
        dt = cfl * h * h * m_min / 2.0
        if has_tend and t + dt > t_end:
            dt = t_end - t
        if dt < 1e-16 * max(1.0, abs(t)):
            status = _STATUS_DTUF
            break
        for i in range(n):
            s_ref = i / (n - 1)
            work[i] = u[i] + dt * (rhs[i] + s_ref * rdot * ux[i])
        rb_new = rb + dt * rdot
        fbn, dfbn, _ = _rot_f(code, p, work[n - 1])
        if abs(dfbn) < 1e-13:
            rb_p = fbn
            du_b = 0.0
        else:
            rb_p, du_b = _newton_rot_nb(code, p, rb_new, work[n - 1], dfbn)
            if np.isnan(du_b):
                status = _STATUS_DTUF
                break
        h_new = rb_new / (n - 1)
        for i in range(n):
            s_ref = i / (n - 1)
            dsh = s_ref * (rb_p - rb_new)
            if i == 0:
                uxn = 0.0
            elif i == n - 1:
                uxn = dfbn
            else:
                uxn = (work[i + 1] - work[i - 1]) / (2.0 * h_new)
            u[i] = work[i] + dsh * uxn
        u[n - 1] += du_b - (rb_p - rb_new) * dfbn
        rb = rb_p
        t += dt
        k += 1
        if h_stop > 0.0 and sup_H < h_stop:
            status = _STATUS_CONV
            break
        if has_tend and t >= t_end - 1e-14 * max(1.0, abs(t_end)):
            status = _STATUS_TEND
            break
    tarr[0] = t
    bpos[0] = rb
    bpos[1] = rb
    return nrec, nsnap, status, k


def run_fast(state0, ctrl, profile, stride):
    """Chunked driver around the jitted kernels; mirrors flow._run_python."""
    from .flow import (
        CHUNK_STEPS, FlowEvent, FlowError, Trajectory, record_state,
    )
    from .geometry import FlowState

    kind = state0.grid.kind
    code = PROFILE_CODES[profile.kind]
    p = np.asarray(profile.params, dtype=float)
    if p.size == 0:
        p = np.zeros(1)
    n = state0.grid.n
    u = state0.u.astype(float).copy()
    if kind == "curve1d":
        bpos = np.array([state0.boundary[0], state0.boundary[1]], dtype=float)
        kernel = run_curve1d
    else:
        bpos = np.array([state0.boundary, state0.boundary], dtype=float)
        kernel = run_radial2d
    tarr = np.array([state0.t], dtype=float)
    scratch = [np.empty(n) for _ in range(7)]
    records = []
    states, state_steps = [], []
    event = FlowEvent.STEP_LIMIT
    k = 0
    has_tend = ctrl.t_end is not None
    t_end = ctrl.t_end if has_tend else 0.0
    while True:
        chunk = int(min(CHUNK_STEPS, ctrl.max_steps - k))
        if stride < 64:
            chunk = min(chunk, 8192)   # bound the snapshot buffer
        if chunk <= 0:
            event = FlowEvent.STEP_LIMIT
            break
        rec = np.empty((chunk + 1, NREC))
        max_snaps = chunk // stride + 3
        snaps = np.empty((max_snaps, n))
        snap_t = np.empty(max_snaps)
        snap_b = np.empty((max_snaps, 2))
        snap_k = np.empty(max_snaps, dtype=np.int64)
        nrec, nsnap, status, k = kernel(
            u, bpos, tarr, code, p, ctrl.cfl, ctrl.eps_guard, ctrl.h_stop,
            t_end, has_tend, chunk, stride, k, rec, snaps, snap_t, snap_b,
            snap_k, *scratch,
        )
        records.append(rec[:nrec].copy())
        for j in range(nsnap):
            b = (snap_b[j, 0], snap_b[j, 1]) if kind == "curve1d" else snap_b[j, 1]
            states.append(FlowState(state0.grid, snap_t[j], snaps[j].copy(), b))
            state_steps.append(int(snap_k[j]))
        if status == _STATUS_GUARD:
            event = FlowEvent.GUARD_TRIPPED
            break
        if status == _STATUS_CONV:
            event = FlowEvent.CONVERGED
            break
        if status == _STATUS_TEND:
            event = FlowEvent.TIME_EXHAUSTED
            break
        if status == _STATUS_DTUF:
            raise FlowError(f"time step underflow or incidence Newton failure at t={tarr[0]}")
        if k >= ctrl.max_steps:
            event = FlowEvent.STEP_LIMIT
            break
    boundary = (bpos[0], bpos[1]) if kind == "curve1d" else float(bpos[0])
    final = FlowState(state0.grid, float(tarr[0]), u.copy(), boundary)
    all_recs = np.concatenate(records) if records else np.empty((0, NREC))
    if event is not FlowEvent.GUARD_TRIPPED:
        all_recs = np.vstack([all_recs, record_state(final, ctrl, profile)])
    if not states or states[-1].t != final.t:
        states.append(final)
        state_steps.append(k)
    return Trajectory(all_recs, states, state_steps, event, float(tarr[0]), state0.grid)
