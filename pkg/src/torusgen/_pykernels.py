"""Pure-Python kernels, used when the compiled extension is unavailable.

The API mirrors ``_kernels.pyx`` exactly: an adaptive DOP853 integrator for
the planar field and the return-time search for unperturbed orbits.
"""
import math

import numpy as np

from ._tableau import (A, B, C, E3, E5, ERROR_EXPONENT, MAX_FACTOR,
                       MIN_FACTOR, N_STAGES, SAFETY)

OK, ESCAPED, MAX_STEPS, STEP_TOO_SMALL, NOT_CLOSED = 0, 1, 2, 3, 4


class _Field:
    """Right-hand side ``((gamma(y^3-y) + eps X) eps^nu, (x-x^3 + eps Y) eps^nu)``."""

    def __init__(self, gamma, nu, eps, packed):
        self.gamma = gamma
        self.eps = eps
        self.scale = eps ** nu if nu else 1.0
        self.terms = []
        self.omega_t = 0.0
        if packed is not None and eps != 0.0:
            target, m, n, mean, hstart, hcount, hj, hc, hs, omega_t = packed
            self.omega_t = float(omega_t)
            for i in range(len(target)):
                lo, cnt = int(hstart[i]), int(hcount[i])
                harm = [(int(hj[k]), float(hc[k]), float(hs[k]))
                        for k in range(lo, lo + cnt)]
                self.terms.append((int(target[i]), int(m[i]), int(n[i]),
                                   float(mean[i]), harm))

    def __call__(self, t, x, y):
        fx = self.gamma * (y * y * y - y)
        fy = x - x * x * x
        if self.terms:
            acc = [0.0, 0.0, 0.0, 0.0]
            for target, m, n, mean, harm in self.terms:
                c = mean
                for j, a, b in harm:
                    w = j * self.omega_t * t
                    c += a * math.cos(w) + b * math.sin(w)
                acc[target] += c * x ** m * y ** n
            e = self.eps
            fx += e * (acc[0] + e * acc[2])
            fy += e * (acc[1] + e * acc[3])
        return fx * self.scale, fy * self.scale


def _rk_step(fun, t, x, y, fx, fy, h, K):
    K[0][0], K[0][1] = fx, fy
    for s in range(1, N_STAGES):
        row = A[s]
        dx = 0.0
        dy = 0.0
        for j in range(s):
            dx += row[j] * K[j][0]
            dy += row[j] * K[j][1]
        K[s][0], K[s][1] = fun(t + C[s] * h, x + h * dx, y + h * dy)
    sx = 0.0
    sy = 0.0
    for j in range(N_STAGES):
        sx += B[j] * K[j][0]
        sy += B[j] * K[j][1]
    xn = x + h * sx
    yn = y + h * sy
    fxn, fyn = fun(t + h, xn, yn)
    K[N_STAGES][0], K[N_STAGES][1] = fxn, fyn
    return xn, yn, fxn, fyn


def _error_norm(K, h, x, y, xn, yn, rtol, atol):
    sc0 = atol + max(abs(x), abs(xn)) * rtol
    sc1 = atol + max(abs(y), abs(yn)) * rtol
    e5x = e5y = e3x = e3y = 0.0
    for j in range(N_STAGES + 1):
        e5x += E5[j] * K[j][0]
        e5y += E5[j] * K[j][1]
        e3x += E3[j] * K[j][0]
        e3y += E3[j] * K[j][1]
    e5 = (e5x / sc0) ** 2 + (e5y / sc1) ** 2
    e3 = (e3x / sc0) ** 2 + (e3y / sc1) ** 2
    if e5 == 0.0 and e3 == 0.0:
        return 0.0
    return abs(h) * e5 / math.sqrt((e5 + 0.01 * e3) * 2.0)


class _Stepper:
    """Adaptive DOP853 state machine that can land exactly on given times."""

    def __init__(self, fun, t, x, y, direction, rtol, atol, h0):
        self.fun = fun
        self.t, self.x, self.y = t, x, y
        self.fx, self.fy = fun(t, x, y)
        self.direction = direction
        self.rtol, self.atol = rtol, atol
        self.h_abs = h0
        self.K = [[0.0, 0.0] for _ in range(N_STAGES + 1)]
        self.nsteps = 0

    def step(self, t_bound):
        """Advance one accepted step without passing ``t_bound``."""
        t = self.t
        d = self.direction
        min_step = 10.0 * abs(math.nextafter(t, d * math.inf) - t)
        rejected = False
        while True:
            if self.h_abs < min_step:
                return False
            h_nat = self.h_abs
            h_abs = self.h_abs
            clipped = False
            if h_abs >= abs(t_bound - t):
                h_abs = abs(t_bound - t)
                clipped = True
            h = d * h_abs
            xn, yn, fxn, fyn = _rk_step(self.fun, t, self.x, self.y,
                                        self.fx, self.fy, h, self.K)
            err = _error_norm(self.K, h, self.x, self.y, xn, yn,
                              self.rtol, self.atol)
            if err < 1.0:
                if err == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = min(MAX_FACTOR, SAFETY * err ** ERROR_EXPONENT)
                if rejected:
                    factor = min(1.0, factor)
                new_h = h_abs * factor
                if clipped and not rejected:
                    new_h = max(new_h, h_nat)
                self.h_abs = new_h
                self.t = t_bound if clipped else t + h
                self.x, self.y, self.fx, self.fy = xn, yn, fxn, fyn
                self.nsteps += 1
                return True
            self.h_abs = h_abs * max(MIN_FACTOR, SAFETY * err ** ERROR_EXPONENT)
            rejected = True

    def trial(self, h):
        """Single unchecked step of size ``h`` from the current state."""
        K = [[0.0, 0.0] for _ in range(N_STAGES + 1)]
        xn, yn, _, _ = _rk_step(self.fun, self.t, self.x, self.y,
                                self.fx, self.fy, h, K)
        return xn, yn


def flow(y0, t0, t_out, gamma, nu, eps, packed, rtol, atol, mx, my,
         max_steps):
    """Integrate the field from ``(t0, y0)`` and sample it at ``t_out``.

    ``t_out`` must be monotone in one direction from ``t0``.  Returns
    ``(samples, n_filled, status, t_last, nsteps)``.
    """
    t_out = np.asarray(t_out, dtype=float)
    out = np.full((t_out.size, 2), np.nan)
    if t_out.size == 0:
        return out, 0, OK, t0, 0
    fun = _Field(gamma, nu, eps, packed)
    direction = 1.0 if t_out[-1] >= t0 else -1.0
    span = abs(t_out[-1] - t0)
    st = _Stepper(fun, float(t0), float(y0[0]), float(y0[1]), direction,
                  rtol, atol, max(min(1e-2, 1e-3 * span), 1e-10))
    for i in range(t_out.size):
        target = float(t_out[i])
        while direction * (target - st.t) > 0.0:
            if st.nsteps >= max_steps:
                return out, i, MAX_STEPS, st.t, st.nsteps
            if not st.step(target):
                return out, i, STEP_TOO_SMALL, st.t, st.nsteps
            if abs(st.x) >= mx or abs(st.y) >= my:
                return out, i, ESCAPED, st.t, st.nsteps
        out[i, 0], out[i, 1] = st.x, st.y
    return out, t_out.size, OK, st.t, st.nsteps


def return_time(b, l, gamma, phi_max, rtol, atol, dist_tol, max_steps):
    """First return time of the unperturbed orbit through ``(b, l)``.

    The crossing of the transversal ``(z - z0) . v0 = 0`` from negative to
    positive is located by Newton iteration on single sub-steps.  Returns
    ``(omega, status, nsteps, x_end, y_end)``.
    """
    fun = _Field(gamma, 0, 0.0, None)
    x0, y0 = float(b), float(l)
    v0x, v0y = fun(0.0, x0, y0)
    vn = math.hypot(v0x, v0y)
    v0x /= vn
    v0y /= vn
    st = _Stepper(fun, 0.0, x0, y0, 1.0, rtol, atol, 1e-3)
    g_prev = 0.0
    while st.t < phi_max:
        if st.nsteps >= max_steps:
            return math.nan, MAX_STEPS, st.nsteps, st.x, st.y
        t_n, x_n, y_n, fx_n, fy_n = st.t, st.x, st.y, st.fx, st.fy
        if not st.step(phi_max):
            return math.nan, STEP_TOO_SMALL, st.nsteps, st.x, st.y
        g_new = (st.x - x0) * v0x + (st.y - y0) * v0y
        if g_prev < 0.0 <= g_new:
            h_full = st.t - t_n
            s = h_full * (-g_prev) / (g_new - g_prev)
            sub = _Stepper(fun, t_n, x_n, y_n, 1.0, rtol, atol, 1.0)
            sub.fx, sub.fy = fx_n, fy_n
            xs, ys = st.x, st.y
            for _ in range(30):
                xs, ys = sub.trial(s)
                g = (xs - x0) * v0x + (ys - y0) * v0y
                fxs, fys = fun(0.0, xs, ys)
                dg = fxs * v0x + fys * v0y
                ds = g / dg
                s -= ds
                if abs(ds) <= 1e-15 * max(1.0, t_n + s):
                    break
            xs, ys = sub.trial(s)
            if math.hypot(xs - x0, ys - y0) < dist_tol:
                return t_n + s, OK, st.nsteps, xs, ys
        g_prev = g_new
    return math.nan, NOT_CLOSED, st.nsteps, st.x, st.y
