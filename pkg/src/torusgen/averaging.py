"""Radial averaging along a generating orbit.

Functions on the torus ``[0, T) x [0, omega)`` are split as
``f = bar + hat(phi) + tilde(t, phi)``.  For nu = 1 ``tilde`` has zero
t-mean; for nu = 0 the hat part is folded into tilde (it is removed by the
same transport equation ``d_t g + d_phi g = rhs``).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (AccuracyError, DissipativityError, PreconditionError,
                     SmallDivisorError)

DIVISOR_FLOOR = 1e-8
PDE_TOL = 1e-10
L_FLOOR = 1e-6
ROOT_TOL = 1e-7
PERIODICITY_TOL = 1e-8


def _freqs(n, period):
    """Angular frequencies of an FFT of length ``n``, with the Nyquist entry zeroed."""
    k = np.fft.fftfreq(n, d=1.0 / n)
    w = 2.0 * np.pi * k / period
    if n % 2 == 0:
        w[n // 2] = 0.0
    return w


def _nyquist_mask(nt, nphi):
    m = np.ones((nt, nphi), dtype=bool)
    if nt % 2 == 0 and nt > 1:
        m[nt // 2, :] = False
    if nphi % 2 == 0 and nphi > 1:
        m[:, nphi // 2] = False
    return m


class BiPeriodicFunction:
    """Grid samples of a function that is ``T``-periodic in t and ``omega``-periodic in phi."""

    def __init__(self, values, T, omega):
        v = np.asarray(values, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
        self.values = v
        self.T = float(T)
        self.omega = float(omega)
        self.coeffs = np.fft.fft2(v) / v.size

    @classmethod
    def from_coeffs(cls, coeffs, T, omega):
        obj = cls.__new__(cls)
        obj.coeffs = np.asarray(coeffs, dtype=complex)
        obj.values = np.real(np.fft.ifft2(obj.coeffs * obj.coeffs.size))
        obj.T = float(T)
        obj.omega = float(omega)
        return obj

    @property
    def shape(self):
        return self.values.shape

    @property
    def bar(self):
        return float(self.coeffs[0, 0].real)

    @property
    def hat(self):
        """Zero-mean phi-only part (t-mean minus double mean)."""
        return self.values.mean(axis=0) - self.bar

    @property
    def tilde(self):
        """Remainder with zero t-mean at every phi."""
        return self.values - self.values.mean(axis=0)[None, :]

    def tilde_for(self, nu):
        """Part handled by the transport solve: zero double mean for nu = 0."""
        return self.values - self.bar if nu == 0 else self.tilde

    def _spectral(self, factor):
        c = self.coeffs * factor * _nyquist_mask(*self.shape)
        return BiPeriodicFunction.from_coeffs(c, self.T, self.omega)

    def dphi(self):
        wq = _freqs(self.shape[1], self.omega)
        return self._spectral(1j * wq[None, :])

    def dt(self):
        wp = _freqs(self.shape[0], self.T)
        return self._spectral(1j * wp[:, None])

    def _basis(self, t, phi):
        nt, nphi = self.shape
        p = np.fft.fftfreq(nt, d=1.0 / nt)
        q = np.fft.fftfreq(nphi, d=1.0 / nphi)
        Et = np.exp(2j * np.pi * np.multiply.outer(np.atleast_1d(t), p) / self.T)
        Ep = np.exp(2j * np.pi * np.multiply.outer(np.atleast_1d(phi), q) / self.omega)
        return Et, Ep

    def eval_grid(self, t, phi):
        """Values on the tensor grid ``t x phi``; shape ``(len(t), len(phi))``."""
        Et, Ep = self._basis(np.asarray(t, float), np.asarray(phi, float))
        return np.real(Et @ self.coeffs @ Ep.T)

    def __call__(self, t, phi):
        """Values at scattered points (broadcast ``t`` against ``phi``)."""
        t, phi = np.broadcast_arrays(np.asarray(t, float), np.asarray(phi, float))
        Et, Ep = self._basis(t.ravel(), phi.ravel())
        out = np.real(np.sum((Et @ self.coeffs) * Ep, axis=1))
        return out.reshape(t.shape) if t.ndim else float(out[0])

    def __add__(self, other):
        ov = other.values if isinstance(other, BiPeriodicFunction) else other
        return BiPeriodicFunction(self.values + ov, self.T, self.omega)

    def __sub__(self, other):
        ov = other.values if isinstance(other, BiPeriodicFunction) else other
        return BiPeriodicFunction(self.values - ov, self.T, self.omega)

    def __mul__(self, other):
        ov = other.values if isinstance(other, BiPeriodicFunction) else other
        return BiPeriodicFunction(self.values * ov, self.T, self.omega)

    __rmul__ = __mul__

    def mean(self):
        return float(self.values.mean())

    def tilde_energy(self):
        return float(np.sum(self.tilde ** 2) / max(np.sum(self.values ** 2), 1e-300))


def decompose(f, T, omega):
    """Wrap grid values (shape ``(nt, nphi)``) as a :class:`BiPeriodicFunction`."""
    f = np.asarray(f, dtype=float)
    for n in f.shape:
        if n & (n - 1):
            raise PreconditionError("grid sizes must be powers of two")
    return BiPeriodicFunction(f, T, omega)


@dataclass
class DivisorReport:
    min_divisor: float
    argmin: tuple
    n_modes: int


def solve_small_divisor(rhs, T=None, omega=None, divisor_floor=DIVISOR_FLOOR,
                        pde_tol=PDE_TOL, return_report=False):
    """Solve ``d_t g + d_phi g = rhs`` with zero double mean.

    Mode ``(p, q)`` of the solution is ``rho_pq / (i (2 pi p / T + 2 pi q / omega))``.
    ``rhs`` must have zero double mean; Nyquist modes are discarded.
    """
    if not isinstance(rhs, BiPeriodicFunction):
        rhs = BiPeriodicFunction(rhs, T, omega)
    T, omega = rhs.T, rhs.omega
    nt, nphi = rhs.shape
    scale = max(float(np.max(np.abs(rhs.values))), 1e-300)
    if abs(rhs.bar) > 1e-11 * scale + 1e-300:
        raise PreconditionError(f"right-hand side has nonzero mean {rhs.bar:.3g}")
    wp = _freqs(nt, T)
    wq = _freqs(nphi, omega)
    d = wp[:, None] + wq[None, :]
    c = rhs.coeffs * _nyquist_mask(nt, nphi)
    c[0, 0] = 0.0
    active = np.abs(c) > 1e-15 * max(float(np.max(np.abs(c))), 1e-300)
    report = DivisorReport(math.inf, (0, 0), int(active.sum()))
    if active.any():
        ad = np.where(active, np.abs(d), np.inf)
        i, j = np.unravel_index(np.argmin(ad), ad.shape)
        p = int(np.fft.fftfreq(nt, 1.0 / nt)[i])
        q = int(np.fft.fftfreq(nphi, 1.0 / nphi)[j])
        report = DivisorReport(float(ad[i, j]), (p, q), int(active.sum()))
        if ad[i, j] < divisor_floor:
            raise SmallDivisorError(
                f"divisor {ad[i, j]:.3g} below floor for mode (p, q) = ({p}, {q})")
    with np.errstate(divide="ignore", invalid="ignore"):
        G = np.where(active, c / (1j * d), 0.0)
    g = BiPeriodicFunction.from_coeffs(G, T, omega)
    resid = (g.dt().values + g.dphi().values) - np.real(np.fft.ifft2(c * c.size))
    err = float(np.max(np.abs(resid)))
    if err > pde_tol * max(1.0, scale):
        raise AccuracyError(f"transport-equation residual {err:.3g}")
    return (g, report) if return_report else g


def phi_antiderivative(values, omega):
    """Zero-mean antiderivative in phi of a zero-mean phi-periodic function (last axis)."""
    v = np.asarray(values, dtype=float)
    n = v.shape[-1]
    F = np.fft.fft(v, axis=-1)
    w = _freqs(n, omega)
    with np.errstate(divide="ignore", invalid="ignore"):
        G = np.where(w != 0.0, F / (1j * w), 0.0)
    return np.real(np.fft.ifft(G, axis=-1))


def t_antiderivative(values, T):
    """Zero-mean antiderivative in t (first axis) of a function with zero t-mean."""
    v = np.asarray(values, dtype=float)
    n = v.shape[0]
    F = np.fft.fft(v, axis=0)
    w = _freqs(n, T)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        G = np.where(w != 0.0, F / (1j * w), 0.0)
    return np.real(np.fft.ifft(G, axis=0))


def phi_derivative(values, omega):
    v = np.asarray(values, dtype=float)
    n = v.shape[-1]
    w = _freqs(n, omega)
    return np.real(np.fft.ifft(np.fft.fft(v, axis=-1) * 1j * w, axis=-1))


# ---------------------------------------------------------------------------
# coefficients of the transformed system

@dataclass(frozen=True, eq=False)
class PQ:
    p: np.ndarray
    q: np.ndarray


def pq_from_arrays(C, S, alpha, gamma, k, l):
    Ck = C - k
    Sl = S - l
    p = 3.0 * gamma * C * S * ((S * S - 1.0) * Ck ** 2 - (C * C - 1.0) * Sl ** 2)
    q = (Ck ** 3 * (2.0 * C + k) + gamma * Sl ** 3 * (2.0 * S + l)) / alpha ** 2
    return PQ(p, q)


def pq_coefficients(orbit, alpha) -> PQ:
    """``p_kl, q_kl`` on the orbit grid."""
    if alpha.sign == "mixed":
        raise PreconditionError("alpha changes sign along the orbit")
    return pq_from_arrays(orbit.C, orbit.S, alpha.values, orbit.spec.gamma, orbit.k, orbit.l)


@dataclass(frozen=True, eq=False)
class BetaProfile:
    values: np.ndarray
    xi: np.ndarray
    end_value: float
    closed_form_error: float | None = None


def integrate_periodic(xi, omega):
    """Spectral ``int_0^phi xi`` on a uniform grid; also returns the full-period integral."""
    n = xi.size
    F = np.fft.fft(xi) / n
    w = _freqs(n, omega)
    phi = omega * np.arange(n) / n
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(w[None, :] != 0.0,
                         F[None, :] * (np.exp(1j * np.multiply.outer(phi, w)) - 1.0) / (1j * w[None, :]),
                         0.0)
    vals = F[0].real * phi + np.real(terms.sum(axis=1))
    return vals, float(F[0].real * omega)


def beta_closed_form_class0(alpha_values, mu):
    a0 = alpha_values[0]
    return 2.5 * (1.0 / a0 - 1.0 / alpha_values) + mu * (a0 ** -2 - alpha_values ** -2)


def beta(orbit, alpha, pq: PQ | None = None, tol=PERIODICITY_TOL) -> BetaProfile:
    """``beta(phi) = int_0^phi xi``, ``xi = alpha^-1 (alpha' q - alpha^-1 p)``.

    For class 0 the closed form is compared with the quadrature and an
    ``AccuracyError`` is raised on a mismatch above ``tol``.
    """
    if alpha.sign == "mixed":
        raise PreconditionError("alpha changes sign along the orbit")
    pq = pq or pq_coefficients(orbit, alpha)
    a = alpha.values
    xi = (alpha.dvalues * pq.q - pq.p / a) / a
    vals, end = integrate_periodic(xi, orbit.omega)
    cf_err = None
    if orbit.k == 0:
        cf = beta_closed_form_class0(a, orbit.spec.mu)
        cf_err = float(np.max(np.abs(cf - vals)))
        if cf_err > tol:
            raise AccuracyError(f"class-0 beta closed form differs by {cf_err:.3g}")
    return BetaProfile(vals, xi, end, cf_err)


# ---------------------------------------------------------------------------
# averaged coefficients

@dataclass(eq=False)
class AveragedCoefficients:
    nu: int
    orbit: object
    alpha: object
    p: np.ndarray
    q: np.ndarray
    xi: np.ndarray
    beta: np.ndarray
    beta_end: float
    Z: BiPeriodicFunction
    R_bar: float
    L0: float
    L1: float
    g0: BiPeriodicFunction | None = None
    g0_bar: float | None = None
    g1_bar: float | None = None
    g1_hat: np.ndarray | None = None
    g1_tilde: np.ndarray | None = None
    Theta0: BiPeriodicFunction | None = None
    Theta1: BiPeriodicFunction | None = None
    h: dict = field(default_factory=dict)
    f: dict = field(default_factory=dict)
    delta: dict = field(default_factory=dict)
    divisor: DivisorReport | None = None
    f_solvability: float | None = None

    @property
    def L(self):
        return self.L0 if self.nu == 0 else self.L1

    @property
    def g_bar(self):
        return self.g0_bar if self.nu == 0 else self.g1_bar

    def diagnostics(self):
        d = {
            "nu": self.nu, "class": self.orbit.spec.cls.label, "b": self.orbit.spec.b,
            "omega": self.orbit.omega, "R_bar": self.R_bar, "L0": self.L0, "L1": self.L1,
            "L": self.L, "Z_bar": self.Z.bar, "beta_end": self.beta_end,
            "g_bar": self.g_bar, "f_solvability": self.f_solvability,
        }
        if self.divisor is not None:
            d["min_divisor"] = self.divisor.min_divisor
            d["min_divisor_mode"] = list(self.divisor.argmin)
            d["n_modes"] = self.divisor.n_modes
        return d


def averaged_coefficients(orbit, alpha, slices, nu, L_floor=L_FLOOR, root_tol=ROOT_TOL,
                          divisor_floor=DIVISOR_FLOOR, require_dissipative=True):
    """Averaged dissipativity constants and first-order correction functions.

    Raises ``PreconditionError`` if the orbit is not a root of the generating
    equation and ``DissipativityError`` if ``|L| < L_floor`` (unless
    ``require_dissipative`` is False, in which case the dependent quantities
    are NaN).
    """
    if nu not in (0, 1):
        raise PreconditionError("nu must be 0 or 1")
    if alpha.sign == "mixed":
        raise PreconditionError("alpha changes sign along the orbit")
    arr = slices.orbit_arrays
    T, w = slices.T, slices.omega
    nphi = slices.phi.size
    if nphi == orbit.n:
        al, dal = alpha.values, alpha.dvalues
        pq = pq_coefficients(orbit, alpha)
        bp = beta(orbit, alpha, pq)
    else:
        al, dal = arr["alpha"], arr["dalpha"]
        pq = pq_from_arrays(arr["C"], arr["S"], al, orbit.spec.gamma, orbit.k, orbit.l)
        xi = (dal * pq.q - pq.p / al) / al
        vals, end = integrate_periodic(xi, w)
        bp = BetaProfile(vals, xi, end)
    if abs(bp.end_value) > PERIODICITY_TOL:
        raise AccuracyError(f"beta is not periodic: beta(omega) = {bp.end_value:.3g}")
    q = pq.q[None, :]
    R = decompose(slices.R, T, w)
    scale = float(np.mean(np.abs(slices.R)))
    if abs(R.bar) > root_tol * max(scale, 1e-300) and abs(R.bar) > 1e-14:
        raise PreconditionError(
            f"orbit is not a root of the generating equation: mean R = {R.bar:.3g}")
    Phi = slices.Phi
    Reps_bar = float(np.mean(slices.R_eps))
    Z = decompose(slices.R_r / al[None, :] - 2.0 * bp.values[None, :] * slices.R
                  + dal[None, :] / al[None, :] * Phi, T, w)
    Rhat = R.hat[None, :]
    L1 = Z.bar - float(np.mean(Rhat * q))

    out = AveragedCoefficients(nu=nu, orbit=orbit, alpha=alpha, p=pq.p, q=pq.q, xi=bp.xi,
                               beta=bp.values, beta_end=bp.end_value, Z=Z, R_bar=R.bar,
                               L0=math.nan, L1=L1)
    # g0 tilde is needed for L0 regardless of nu
    g0t, rep = solve_small_divisor(BiPeriodicFunction(R.tilde_for(0), T, w),
                                   divisor_floor=divisor_floor, return_report=True)
    g0p = g0t.dphi().values
    out.L0 = Z.bar - float(np.mean(g0p * q))
    out.divisor = rep
    L = out.L
    ok = abs(L) >= L_floor
    if not ok and require_dissipative:
        raise DissipativityError(f"|L{nu}| = {abs(L):.3g} below {L_floor}", L=L)
    inv = (lambda x: x / L) if ok else (lambda x: math.nan)

    if nu == 0:
        g0bar = inv(float(np.mean(g0p * Phi)) - Reps_bar
                    - float(np.mean(g0t.values * (Z.values - g0p * q))))
        g0 = BiPeriodicFunction(g0bar + g0t.values, T, w)
        out.g0, out.g0_bar = g0, g0bar
        out.Theta0 = BiPeriodicFunction(Phi + q * g0.values, T, w)
        if ok:
            h_rhs = Z.values - g0p * q - out.L0
            h0 = solve_small_divisor(BiPeriodicFunction(h_rhs - h_rhs.mean(), T, w),
                                     divisor_floor=divisor_floor)
            hsum = h0.dt().values + h0.dphi().values
            f_rhs = g0.values * (out.L0 + hsum) + slices.R_eps - g0p * Phi
            out.f_solvability = float(f_rhs.mean())
            f0 = solve_small_divisor(BiPeriodicFunction(f_rhs - f_rhs.mean(), T, w),
                                     divisor_floor=divisor_floor)
            th = out.Theta0.values
            d0 = solve_small_divisor(BiPeriodicFunction(th - th.mean(), T, w),
                                     divisor_floor=divisor_floor)
            out.h = {"h0_tilde": h0}
            out.f = {"f0_tilde": f0}
            out.delta = {"delta0_tilde": d0, "Theta0_bar": float(th.mean())}
    else:
        g1hat = phi_antiderivative(R.hat, w)
        g1til = t_antiderivative(R.tilde, T)
        g1bar = inv(float(np.mean(Rhat * Phi)) - Reps_bar
                    - float(np.mean(g1hat[None, :] * (Z.values - Rhat * q))))
        out.g1_bar, out.g1_hat, out.g1_tilde = g1bar, g1hat, g1til
        out.Theta1 = BiPeriodicFunction(Phi + q * (g1bar + g1hat[None, :]), T, w)
        if ok:
            hz = BiPeriodicFunction(Z.values - Rhat * q, T, w)
            h1hat = phi_antiderivative(hz.hat, w)
            h1til = t_antiderivative(Z.tilde, T)
            th1 = out.Theta1.values
            f_rhs = ((g1bar + g1hat[None, :]) * Z.values + slices.R_eps
                     - phi_derivative(g1til, w) - Rhat * th1)
            fr = BiPeriodicFunction(f_rhs, T, w)
            out.f_solvability = fr.bar
            Th = BiPeriodicFunction(th1, T, w)
            out.h = {"h1_hat": h1hat, "h1_tilde": h1til}
            out.f = {"f1_hat": phi_antiderivative(fr.hat, w), "f1_tilde": t_antiderivative(fr.tilde, T)}
            out.delta = {"delta1_hat": phi_antiderivative(Th.hat, w),
                         "delta1_tilde": t_antiderivative(Th.tilde, T), "Theta1_bar": Th.bar}
    return out


def write_diagnostics(avg: AveragedCoefficients, path):
    with open(path, "w") as fh:
        json.dump(avg.diagnostics(), fh, indent=2)
