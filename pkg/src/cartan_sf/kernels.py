"""Hot loops: fixed-step RK4 with switch bisection and batch exact propagation.

Every function here is written in the numba-compatible subset; ``_jit.njit``
compiles it or leaves it as plain Python depending on the env flag.  The batch
propagator also has a vectorized numpy twin used when numba is off.

State layout for the full system: ``y = (h1, h2, h3, h4, h5, x, y, z, v, w)``.
"""

import math

import numpy as np

from ._jit import USING_NUMBA, njit

STATUS_OK = 0
STATUS_EVENT_OVERFLOW = 1


@njit
def full_rhs_into(y, u1, u2, out):
    h3 = y[2]
    xx = y[5]
    yy = y[6]
    half_r2 = 0.5 * (xx * xx + yy * yy)
    out[0] = -u2 * h3
    out[1] = u1 * h3
    out[2] = u1 * y[3] + u2 * y[4]
    out[3] = 0.0
    out[4] = 0.0
    out[5] = u1
    out[6] = u2
    out[7] = 0.5 * (u2 * xx - u1 * yy)
    out[8] = u2 * half_r2
    out[9] = -u1 * half_r2


@njit
def rk4_step(y, u1, u2, h, out, k1, k2, k3, k4, tmp):
    n = y.shape[0]
    full_rhs_into(y, u1, u2, k1)
    for i in range(n):
        tmp[i] = y[i] + 0.5 * h * k1[i]
    full_rhs_into(tmp, u1, u2, k2)
    for i in range(n):
        tmp[i] = y[i] + 0.5 * h * k2[i]
    full_rhs_into(tmp, u1, u2, k3)
    for i in range(n):
        tmp[i] = y[i] + h * k3[i]
    full_rhs_into(tmp, u1, u2, k4)
    for i in range(n):
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit
def _bisect_crossing(y, u1, u2, h, comp, sign, event_tol, out, k1, k2, k3, k4, tmp):
    # sign*y[comp] >= 0 at 0 and < 0 at h; returns the first time past the crossing
    lo = 0.0
    hi = h
    while hi - lo > event_tol:
        mid = 0.5 * (lo + hi)
        rk4_step(y, u1, u2, mid, out, k1, k2, k3, k4, tmp)
        if sign * out[comp] < 0.0:
            hi = mid
        else:
            lo = mid
    return hi


@njit
def _record(rec_t, rec_y, rec_u, idx, t, y, u1, u2):
    rec_t[idx] = t
    for i in range(10):
        rec_y[idx, i] = y[i]
    rec_u[idx, 0] = u1
    rec_u[idx, 1] = u2


@njit
def rk4_feedback(y0, s1, s2, T, dt, stride, event_tol, max_events):
    """Integrate under the vertex control (sgn h1, sgn h2), switching at sign changes.

    Returns ``(n, t, y, u, n_events, status)``; rows ``[:n]`` are valid.  Switch
    instants are always recorded in addition to every ``stride``-th grid node.
    """
    n_steps = int(math.ceil(T / dt - 1e-9))
    cap = n_steps // stride + max_events + 3
    rec_t = np.empty(cap)
    rec_y = np.empty((cap, 10))
    rec_u = np.empty((cap, 2))
    y = y0.copy()
    trial = np.empty(10)
    k1 = np.empty(10)
    k2 = np.empty(10)
    k3 = np.empty(10)
    k4 = np.empty(10)
    tmp = np.empty(10)
    u = np.empty(2)
    u[0] = s1
    u[1] = s2
    n = 0
    _record(rec_t, rec_y, rec_u, n, 0.0, y, u[0], u[1])
    n += 1
    t = 0.0
    k = 0
    n_events = 0
    while k < n_steps:
        t_next = min((k + 1) * dt, T)
        h = t_next - t
        if h <= 0.0:
            k += 1
            continue
        rk4_step(y, u[0], u[1], h, trial, k1, k2, k3, k4, tmp)
        tau = h
        hit0 = u[0] * trial[0] < 0.0
        hit1 = u[1] * trial[1] < 0.0
        if hit0 or hit1:
            tau0 = h
            tau1 = h
            if hit0:
                tau0 = _bisect_crossing(y, u[0], u[1], h, 0, u[0], event_tol, trial, k1, k2, k3, k4, tmp)
            if hit1:
                tau1 = _bisect_crossing(y, u[0], u[1], h, 1, u[1], event_tol, trial, k1, k2, k3, k4, tmp)
            tau = min(tau0, tau1)
            rk4_step(y, u[0], u[1], tau, trial, k1, k2, k3, k4, tmp)
            for i in range(10):
                y[i] = trial[i]
            t = t + tau
            if hit0 and tau0 - tau <= event_tol:
                u[0] = -u[0]
            if hit1 and tau1 - tau <= event_tol:
                u[1] = -u[1]
            n_events += 1
            if n_events > max_events:
                return n, rec_t, rec_y, rec_u, n_events, STATUS_EVENT_OVERFLOW
            _record(rec_t, rec_y, rec_u, n, t, y, u[0], u[1])
            n += 1
            continue
        for i in range(10):
            y[i] = trial[i]
        t = t_next
        k += 1
        if k % stride == 0 or k == n_steps:
            _record(rec_t, rec_y, rec_u, n, t, y, u[0], u[1])
            n += 1
    return n, rec_t, rec_y, rec_u, n_events, STATUS_OK


@njit
def rk4_piecewise(y0, values, durations, dt, stride):
    """Integrate a fixed piecewise-constant control; steps never straddle a segment boundary."""
    n_seg = durations.shape[0]
    cap = n_seg + 2
    for j in range(n_seg):
        cap += int(math.ceil(durations[j] / dt - 1e-9)) // stride + 1
    rec_t = np.empty(cap)
    rec_y = np.empty((cap, 10))
    rec_u = np.empty((cap, 2))
    y = y0.copy()
    trial = np.empty(10)
    k1 = np.empty(10)
    k2 = np.empty(10)
    k3 = np.empty(10)
    k4 = np.empty(10)
    tmp = np.empty(10)
    n = 0
    t0 = 0.0
    u1 = values[0, 0] if n_seg > 0 else 0.0
    u2 = values[0, 1] if n_seg > 0 else 0.0
    _record(rec_t, rec_y, rec_u, n, 0.0, y, u1, u2)
    n += 1
    for j in range(n_seg):
        u1 = values[j, 0]
        u2 = values[j, 1]
        d = durations[j]
        m = int(math.ceil(d / dt - 1e-9))
        t_loc = 0.0
        for k in range(m):
            t_next = min((k + 1) * dt, d)
            rk4_step(y, u1, u2, t_next - t_loc, trial, k1, k2, k3, k4, tmp)
            for i in range(10):
                y[i] = trial[i]
            t_loc = t_next
            if (k + 1) % stride == 0 and k + 1 < m:
                _record(rec_t, rec_y, rec_u, n, t0 + t_loc, y, u1, u2)
                n += 1
        t0 += d
        nu1 = values[j + 1, 0] if j + 1 < n_seg else u1
        nu2 = values[j + 1, 1] if j + 1 < n_seg else u2
        _record(rec_t, rec_y, rec_u, n, t0, y, nu1, nu2)
        n += 1
    return n, rec_t, rec_y, rec_u


@njit
def _reduced_step(a, b, sig, hf4, hf5, h):
    # (hf1, hf3)' = (-hf3, hf4*sig + hf5); RK4 is exact here up to rounding
    f = hf4 * sig + hf5
    ka1 = -b
    kb1 = f
    ka2 = -(b + 0.5 * h * kb1)
    kb2 = f
    ka3 = -(b + 0.5 * h * kb2)
    kb3 = f
    ka4 = -(b + h * kb3)
    kb4 = f
    na = a + h / 6.0 * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4)
    nb = b + h / 6.0 * (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4)
    return na, nb


@njit
def rk4_reduced(hf1, hf3, hf4, hf5, T, dt, stride, event_tol, max_events):
    """Reduced vertical system on hf1 != 0 with bisection at hf1 sign changes.

    Returns ``(n, t, state, n_crossings, status)`` with state columns (hf1, hf3).
    """
    n_steps = int(math.ceil(T / dt - 1e-9))
    cap = n_steps // stride + max_events + 3
    rec_t = np.empty(cap)
    rec = np.empty((cap, 2))
    a = hf1
    b = hf3
    sig = 1.0 if hf1 > 0.0 else -1.0
    rec_t[0] = 0.0
    rec[0, 0] = a
    rec[0, 1] = b
    n = 1
    t = 0.0
    k = 0
    crossings = 0
    while k < n_steps:
        t_next = min((k + 1) * dt, T)
        h = t_next - t
        na, nb = _reduced_step(a, b, sig, hf4, hf5, h)
        if sig * na < 0.0:
            lo = 0.0
            hi = h
            while hi - lo > event_tol:
                mid = 0.5 * (lo + hi)
                ma, mb = _reduced_step(a, b, sig, hf4, hf5, mid)
                if sig * ma < 0.0:
                    hi = mid
                else:
                    lo = mid
            a, b = _reduced_step(a, b, sig, hf4, hf5, hi)
            t = t + hi
            sig = -sig
            crossings += 1
            if crossings > max_events:
                return n, rec_t, rec, crossings, STATUS_EVENT_OVERFLOW
            rec_t[n] = t
            rec[n, 0] = a
            rec[n, 1] = b
            n += 1
            continue
        a = na
        b = nb
        t = t_next
        k += 1
        if k % stride == 0 or k == n_steps:
            rec_t[n] = t
            rec[n, 0] = a
            rec[n, 1] = b
            n += 1
    return n, rec_t, rec, crossings, STATUS_OK


@njit
def _piecewise_endpoints_loop(u1, u2, dur):
    n, m = dur.shape
    out = np.zeros((n, 5))
    for r in range(n):
        x = 0.0
        y = 0.0
        z = 0.0
        v = 0.0
        w = 0.0
        for j in range(m):
            a = u1[r, j]
            c = u2[r, j]
            d = dur[r, j]
            if d == 0.0:
                continue
            r0 = x * x + y * y
            lin = x * a + y * c
            quad = a * a + c * c
            integral = r0 * d + lin * d * d + quad * d * d * d / 3.0
            z += 0.5 * (c * x - a * y) * d
            v += 0.5 * c * integral
            w -= 0.5 * a * integral
            x += a * d
            y += c * d
        out[r, 0] = x
        out[r, 1] = y
        out[r, 2] = z
        out[r, 3] = v
        out[r, 4] = w
    return out


def _piecewise_endpoints_numpy(u1, u2, dur):
    n, m = dur.shape
    x = np.zeros(n)
    y = np.zeros(n)
    z = np.zeros(n)
    v = np.zeros(n)
    w = np.zeros(n)
    for j in range(m):
        a = u1[:, j]
        c = u2[:, j]
        d = dur[:, j]
        integral = (x * x + y * y) * d + (x * a + y * c) * d * d + (a * a + c * c) * d**3 / 3.0
        z = z + 0.5 * (c * x - a * y) * d
        v = v + 0.5 * c * integral
        w = w - 0.5 * a * integral
        x = x + a * d
        y = y + c * d
    return np.stack([x, y, z, v, w], axis=1)


def piecewise_endpoints(u1, u2, durations):
    """Exact endpoints from the origin for a batch of piecewise-constant controls.

    All arguments are ``(n, k)`` arrays (zero durations are allowed as padding).
    """
    u1 = np.ascontiguousarray(u1, dtype=float)
    u2 = np.ascontiguousarray(np.broadcast_to(u2, u1.shape), dtype=float)
    durations = np.ascontiguousarray(durations, dtype=float)
    if USING_NUMBA:
        return _piecewise_endpoints_loop(u1, u2, durations)
    return _piecewise_endpoints_numpy(u1, u2, durations)
