# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled DOP853 kernels for the planar field.

Same API and step-control logic as ``_pykernels``; the integration loops run
without the GIL so threaded scans scale across cores.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, fabs, hypot, nextafter, pow, INFINITY, NAN

from ._tableau import A as _A, B as _B, C as _C, E3 as _E3, E5 as _E5
from ._tableau import SAFETY as _SAFETY, MIN_FACTOR as _MINF, MAX_FACTOR as _MAXF
from ._tableau import ERROR_EXPONENT as _EXP

DEF NS = 12
DEF MAXDEG = 32

cdef double TA[NS][NS]
cdef double TB[NS]
cdef double TC[NS]
cdef double TE3[NS + 1]
cdef double TE5[NS + 1]
cdef double SAFETY = _SAFETY
cdef double MIN_FACTOR = _MINF
cdef double MAX_FACTOR = _MAXF
cdef double EXPO = _EXP

cdef int _i, _j
for _i in range(NS):
    for _j in range(NS):
        TA[_i][_j] = _A[_i][_j]
    TB[_i] = _B[_i]
    TC[_i] = _C[_i]
for _i in range(NS + 1):
    TE3[_i] = _E3[_i]
    TE5[_i] = _E5[_i]

cdef enum:
    S_OK = 0
    S_ESCAPED = 1
    S_MAX_STEPS = 2
    S_STEP_TOO_SMALL = 3
    S_NOT_CLOSED = 4

OK, ESCAPED, MAX_STEPS, STEP_TOO_SMALL, NOT_CLOSED = 0, 1, 2, 3, 4


ctypedef struct Field:
    double gamma
    double eps
    double scale
    double omega_t
    int nterms
    int maxdeg
    int jmax
    int* target
    int* m
    int* n
    double* mean
    int* hstart
    int* hcount
    int* hj
    double* hc
    double* hs


cdef inline void rhs(Field* F, double t, double x, double y,
                     double* ox, double* oy) noexcept nogil:
    cdef double fx = F.gamma * (y * y * y - y)
    cdef double fy = x - x * x * x
    cdef double xp[MAXDEG + 1]
    cdef double yp[MAXDEG + 1]
    cdef double cj[MAXDEG + 1]
    cdef double sj[MAXDEG + 1]
    cdef double acc[4]
    cdef double c
    cdef int i, k, jj
    if F.nterms > 0:
        xp[0] = 1.0
        yp[0] = 1.0
        for k in range(1, F.maxdeg + 1):
            xp[k] = xp[k - 1] * x
            yp[k] = yp[k - 1] * y
        for k in range(1, F.jmax + 1):
            cj[k] = cos(k * F.omega_t * t)
            sj[k] = sin(k * F.omega_t * t)
        acc[0] = 0.0
        acc[1] = 0.0
        acc[2] = 0.0
        acc[3] = 0.0
        for i in range(F.nterms):
            c = F.mean[i]
            for k in range(F.hstart[i], F.hstart[i] + F.hcount[i]):
                jj = F.hj[k]
                c += F.hc[k] * cj[jj] + F.hs[k] * sj[jj]
            acc[F.target[i]] += c * xp[F.m[i]] * yp[F.n[i]]
        fx += F.eps * (acc[0] + F.eps * acc[2])
        fy += F.eps * (acc[1] + F.eps * acc[3])
    ox[0] = fx * F.scale
    oy[0] = fy * F.scale


cdef inline void rk_step(Field* F, double t, double x, double y,
                         double fx, double fy, double h, double* K,
                         double* out) noexcept nogil:
    # K has (NS + 1) x 2 entries; out receives xn, yn, fxn, fyn
    cdef int s, j
    cdef double dx, dy, sx, sy
    K[0] = fx
    K[1] = fy
    for s in range(1, NS):
        dx = 0.0
        dy = 0.0
        for j in range(s):
            dx += TA[s][j] * K[2 * j]
            dy += TA[s][j] * K[2 * j + 1]
        rhs(F, t + TC[s] * h, x + h * dx, y + h * dy, &K[2 * s], &K[2 * s + 1])
    sx = 0.0
    sy = 0.0
    for j in range(NS):
        sx += TB[j] * K[2 * j]
        sy += TB[j] * K[2 * j + 1]
    out[0] = x + h * sx
    out[1] = y + h * sy
    rhs(F, t + h, out[0], out[1], &out[2], &out[3])
    K[2 * NS] = out[2]
    K[2 * NS + 1] = out[3]


cdef inline double error_norm(double* K, double h, double x, double y,
                              double xn, double yn, double rtol,
                              double atol) noexcept nogil:
    cdef double sc0 = atol + max(fabs(x), fabs(xn)) * rtol
    cdef double sc1 = atol + max(fabs(y), fabs(yn)) * rtol
    cdef double e5x = 0.0, e5y = 0.0, e3x = 0.0, e3y = 0.0, e5, e3
    cdef int j
    for j in range(NS + 1):
        e5x += TE5[j] * K[2 * j]
        e5y += TE5[j] * K[2 * j + 1]
        e3x += TE3[j] * K[2 * j]
        e3y += TE3[j] * K[2 * j + 1]
    e5 = (e5x / sc0) ** 2 + (e5y / sc1) ** 2
    e3 = (e3x / sc0) ** 2 + (e3y / sc1) ** 2
    if e5 == 0.0 and e3 == 0.0:
        return 0.0
    return fabs(h) * e5 / sqrt((e5 + 0.01 * e3) * 2.0)


ctypedef struct Stepper:
    double t
    double x
    double y
    double fx
    double fy
    double direction
    double rtol
    double atol
    double h_abs
    long nsteps
    double K[2 * (NS + 1)]


cdef inline void stepper_init(Stepper* st, Field* F, double t, double x,
                              double y, double direction, double rtol,
                              double atol, double h0) noexcept nogil:
    st.t = t
    st.x = x
    st.y = y
    rhs(F, t, x, y, &st.fx, &st.fy)
    st.direction = direction
    st.rtol = rtol
    st.atol = atol
    st.h_abs = h0
    st.nsteps = 0


cdef int stepper_step(Stepper* st, Field* F, double t_bound) noexcept nogil:
    cdef double t = st.t
    cdef double d = st.direction
    cdef double min_step = 10.0 * fabs(nextafter(t, d * INFINITY) - t)
    cdef bint rejected = False
    cdef bint clipped
    cdef double h_nat, h_abs, h, err, factor, new_h
    cdef double out[4]
    while True:
        if st.h_abs < min_step:
            return 0
        h_nat = st.h_abs
        h_abs = st.h_abs
        clipped = False
        if h_abs >= fabs(t_bound - t):
            h_abs = fabs(t_bound - t)
            clipped = True
        h = d * h_abs
        rk_step(F, t, st.x, st.y, st.fx, st.fy, h, st.K, out)
        err = error_norm(st.K, h, st.x, st.y, out[0], out[1], st.rtol, st.atol)
        if err < 1.0:
            if err == 0.0:
                factor = MAX_FACTOR
            else:
                factor = min(MAX_FACTOR, SAFETY * pow(err, EXPO))
            if rejected:
                factor = min(1.0, factor)
            new_h = h_abs * factor
            if clipped and not rejected:
                new_h = max(new_h, h_nat)
            st.h_abs = new_h
            if clipped:
                st.t = t_bound
            else:
                st.t = t + h
            st.x = out[0]
            st.y = out[1]
            st.fx = out[2]
            st.fy = out[3]
            st.nsteps += 1
            return 1
        st.h_abs = h_abs * max(MIN_FACTOR, SAFETY * pow(err, EXPO))
        rejected = True


cdef class _FieldData:
    """Owns the arrays behind a ``Field`` struct."""
    cdef Field F
    cdef int[::1] target, m, n, hstart, hcount, hj
    cdef double[::1] mean, hc, hs

    def __init__(self, double gamma, int nu, double eps, packed):
        self.F.gamma = gamma
        self.F.eps = eps
        self.F.scale = eps ** nu if nu else 1.0
        self.F.nterms = 0
        self.F.maxdeg = 0
        self.F.jmax = 0
        self.F.omega_t = 0.0
        if packed is None or eps == 0.0:
            return
        target, m, n, mean, hstart, hcount, hj, hc, hs, omega_t = packed
        self.target = np.ascontiguousarray(target, dtype=np.intc)
        self.m = np.ascontiguousarray(m, dtype=np.intc)
        self.n = np.ascontiguousarray(n, dtype=np.intc)
        self.mean = np.ascontiguousarray(mean, dtype=np.float64)
        self.hstart = np.ascontiguousarray(hstart, dtype=np.intc)
        self.hcount = np.ascontiguousarray(hcount, dtype=np.intc)
        # keep the harmonic arrays non-empty so taking &arr[0] is valid
        self.hj = np.ascontiguousarray(np.append(np.asarray(hj, dtype=np.intc), 0), dtype=np.intc)
        self.hc = np.ascontiguousarray(np.append(np.asarray(hc, dtype=float), 0.0))
        self.hs = np.ascontiguousarray(np.append(np.asarray(hs, dtype=float), 0.0))
        nt = self.target.shape[0]
        if nt == 0:
            return
        maxdeg = max(int(np.max(self.m)), int(np.max(self.n)))
        jmax = int(np.max(self.hj))
        if maxdeg > MAXDEG or jmax > MAXDEG:
            raise ValueError("compiled kernel supports degree and harmonic index up to %d" % MAXDEG)
        self.F.nterms = nt
        self.F.maxdeg = maxdeg
        self.F.jmax = jmax
        self.F.omega_t = float(omega_t)
        self.F.target = &self.target[0]
        self.F.m = &self.m[0]
        self.F.n = &self.n[0]
        self.F.mean = &self.mean[0]
        self.F.hstart = &self.hstart[0]
        self.F.hcount = &self.hcount[0]
        self.F.hj = &self.hj[0]
        self.F.hc = &self.hc[0]
        self.F.hs = &self.hs[0]


def flow(y0, double t0, t_out, double gamma, int nu, double eps, packed,
         double rtol, double atol, double mx, double my, long max_steps):
    """Integrate the field from ``(t0, y0)`` and sample it at ``t_out``.

    Returns ``(samples, n_filled, status, t_last, nsteps)``.
    """
    cdef double[::1] ts = np.ascontiguousarray(t_out, dtype=np.float64)
    cdef Py_ssize_t nout = ts.shape[0]
    res = np.full((nout, 2), np.nan)
    if nout == 0:
        return res, 0, OK, t0, 0
    cdef double[:, ::1] out = res
    cdef _FieldData fd = _FieldData(gamma, nu, eps, packed)
    cdef Stepper st
    cdef double direction = 1.0 if ts[nout - 1] >= t0 else -1.0
    cdef double span = fabs(ts[nout - 1] - t0)
    cdef double h0 = max(min(1e-2, 1e-3 * span), 1e-10)
    cdef Py_ssize_t i
    cdef int status = S_OK
    cdef Py_ssize_t filled = nout
    cdef double target
    with nogil:
        stepper_init(&st, &fd.F, t0, <double>0.0, <double>0.0, direction, rtol, atol, h0)
    st.x = float(y0[0])
    st.y = float(y0[1])
    with nogil:
        rhs(&fd.F, t0, st.x, st.y, &st.fx, &st.fy)
        for i in range(nout):
            target = ts[i]
            while direction * (target - st.t) > 0.0:
                if st.nsteps >= max_steps:
                    status = S_MAX_STEPS
                    break
                if not stepper_step(&st, &fd.F, target):
                    status = S_STEP_TOO_SMALL
                    break
                if fabs(st.x) >= mx or fabs(st.y) >= my:
                    status = S_ESCAPED
                    break
            if status != S_OK:
                filled = i
                break
            out[i, 0] = st.x
            out[i, 1] = st.y
    return res, int(filled), status, st.t, st.nsteps


def return_time(double b, double l, double gamma, double phi_max,
                double rtol, double atol, double dist_tol, long max_steps):
    """First return time of the unperturbed orbit through ``(b, l)``.

    Returns ``(omega, status, nsteps, x_end, y_end)``.
    """
    cdef _FieldData fd = _FieldData(gamma, 0, 0.0, None)
    cdef Stepper st, sub
    cdef double x0 = b, y0 = l, v0x, v0y, vn
    cdef double t_n, x_n, y_n, fx_n, fy_n, g_prev = 0.0, g_new, g, dg, s, ds
    cdef double xs, ys, fxs, fys
    cdef double outv[4]
    cdef double Ktmp[2 * (NS + 1)]
    cdef int it, status = S_NOT_CLOSED
    cdef double omega = NAN
    with nogil:
        rhs(&fd.F, 0.0, x0, y0, &v0x, &v0y)
        vn = hypot(v0x, v0y)
        v0x /= vn
        v0y /= vn
        stepper_init(&st, &fd.F, 0.0, x0, y0, 1.0, rtol, atol, 1e-3)
        while st.t < phi_max:
            if st.nsteps >= max_steps:
                status = S_MAX_STEPS
                break
            t_n = st.t
            x_n = st.x
            y_n = st.y
            fx_n = st.fx
            fy_n = st.fy
            if not stepper_step(&st, &fd.F, phi_max):
                status = S_STEP_TOO_SMALL
                break
            g_new = (st.x - x0) * v0x + (st.y - y0) * v0y
            if g_prev < 0.0 and g_new >= 0.0:
                s = (st.t - t_n) * (-g_prev) / (g_new - g_prev)
                for it in range(30):
                    rk_step(&fd.F, t_n, x_n, y_n, fx_n, fy_n, s, Ktmp, outv)
                    g = (outv[0] - x0) * v0x + (outv[1] - y0) * v0y
                    dg = outv[2] * v0x + outv[3] * v0y
                    ds = g / dg
                    s -= ds
                    if fabs(ds) <= 1e-15 * max(1.0, t_n + s):
                        break
                rk_step(&fd.F, t_n, x_n, y_n, fx_n, fy_n, s, Ktmp, outv)
                if hypot(outv[0] - x0, outv[1] - y0) < dist_tol:
                    omega = t_n + s
                    status = S_OK
                    st.x = outv[0]
                    st.y = outv[1]
                    break
            g_prev = g_new
    return omega, status, st.nsteps, st.x, st.y
