"""First-order invariant surface in the original phase plane.

In polar coordinates about the generating orbit the surface is
``r = Upsilon(t, phi, eps)`` with ``Upsilon = alpha^-1(phi) g(t, phi) eps``;
points map back through ``x = C + (C - k) r, y = S + (S - l) r``.
"""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _fourier
from .averaging import AveragedCoefficients, BiPeriodicFunction
from .errors import DomainError
from .model import EQUILIBRIA, SystemConfig


class RangeWarning(UserWarning):
    """A surface point lies outside the configured rectangle."""


@dataclass(eq=False)
class SurfaceExpansion:
    nu: int
    cfg: SystemConfig
    avg: AveragedCoefficients
    second_order: bool = False
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def orbit(self):
        return self.avg.orbit

    @property
    def alpha(self):
        return self.avg.alpha

    @property
    def beta(self):
        return self.avg.beta

    @property
    def k(self):
        return self.orbit.k

    @property
    def l(self):
        return self.orbit.l

    def _c(self, name, fn):
        if name not in self._cache:
            self._cache[name] = fn()
        return self._cache[name]

    def header(self, eps=None):
        s = self.orbit.spec
        return {"class": s.cls.label, "b_star": s.b, "omega_star": self.orbit.omega,
                "eps": eps, "nu": self.nu, "L": self.avg.L, "gamma": s.gamma,
                "order": "first" if not self.second_order else "first+partial-second"}


def build_surface(avg: AveragedCoefficients, cfg: SystemConfig, second_order=False):
    """Wrap averaged coefficients as a surface expansion.

    ``second_order`` adds the computable part of the eps^2 term (everything
    except the non-constructive remainder); it is an experiment hook and is
    off by default.
    """
    if avg.nu != cfg.nu:
        raise DomainError("averaged coefficients were computed for a different nu")
    if not np.isfinite(avg.g_bar if avg.g_bar is not None else np.nan):
        raise DomainError("averaged coefficients are incomplete (dissipativity failed)")
    return SurfaceExpansion(avg.nu, cfg, avg, second_order)


def _alpha_coeffs(se):
    return se._c("alpha", lambda: _fourier.rcoeffs(se.alpha.values))


def _phi_coeffs(se, name, values):
    return se._c(name, lambda: _fourier.rcoeffs(values))


def _g_parts(se):
    """Return ``(g, f2)`` as callables of ``(t, phi)`` on a tensor grid."""
    avg = se.avg
    w = se.orbit.omega
    if se.nu == 0:
        g0 = avg.g0
        f0 = avg.f.get("f0_tilde") if se.second_order else None

        def g_grid(t, phi):
            return g0.eval_grid(t, phi)

        def f_grid(t, phi):
            return f0.eval_grid(t, phi) if f0 is not None else 0.0
    else:
        cg = _phi_coeffs(se, "g1hat", avg.g1_hat)
        cf = _phi_coeffs(se, "f1hat", avg.f["f1_hat"]) if se.second_order else None

        def g_grid(t, phi):
            v = avg.g1_bar + _fourier.evaluate(cg, phi, w)
            return np.broadcast_to(v[None, :], (np.size(t), np.size(phi)))

        def f_grid(t, phi):
            if cf is None:
                return 0.0
            v = _fourier.evaluate(cf, phi, w)
            return np.broadcast_to(v[None, :], (np.size(t), np.size(phi)))
    return g_grid, f_grid


def upsilon_grid(se: SurfaceExpansion, t, phi, eps):
    """``Upsilon`` on the tensor grid ``t x phi``."""
    t = np.atleast_1d(np.asarray(t, float))
    phi = np.atleast_1d(np.asarray(phi, float))
    w = se.orbit.omega
    a = _fourier.evaluate(_alpha_coeffs(se), phi, w)[None, :]
    g_grid, f_grid = _g_parts(se)
    g = g_grid(t, phi)
    out = g * eps
    if se.second_order:
        b = _fourier.evaluate(_phi_coeffs(se, "beta", se.beta), phi, w)[None, :]
        out = out + (f_grid(t, phi) + b * g * g) * eps * eps
    return out / a


def upsilon_first_order(se: SurfaceExpansion, t, phi, eps):
    """``alpha^-1(phi) g(t, phi) eps`` at a single point or matching arrays."""
    t_arr, phi_arr = np.broadcast_arrays(np.asarray(t, float), np.asarray(phi, float))
    flat_t, flat_p = t_arr.ravel(), phi_arr.ravel()
    vals = np.array([upsilon_grid(se, [tt], [pp], eps)[0, 0] for tt, pp in zip(flat_t, flat_p)])
    return vals.reshape(t_arr.shape) if t_arr.ndim else float(vals[0])


def _orbit_at(se, phi):
    cC, cS = se._c("orbit", lambda: se.orbit.coeffs())
    w = se.orbit.omega
    return _fourier.evaluate(cC, phi, w), _fourier.evaluate(cS, phi, w)


def torus_point_grid(se, t, phi, eps, warn=True):
    """``(x, y)`` arrays of shape ``(len(t), len(phi))``."""
    phi = np.atleast_1d(np.asarray(phi, float))
    C, S = _orbit_at(se, phi)
    U = upsilon_grid(se, t, phi, eps) if eps != 0 else 0.0
    x = C[None, :] + (C[None, :] - se.k) * U
    y = S[None, :] + (S[None, :] - se.l) * U
    x = np.broadcast_to(x, (np.size(t), phi.size)).copy()
    y = np.broadcast_to(y, (np.size(t), phi.size)).copy()
    if warn and (np.any(np.abs(x) >= se.cfg.Mx) or np.any(np.abs(y) >= se.cfg.My)):
        warnings.warn("surface point outside the configured domain", RangeWarning)
    return x, y


def torus_point(se: SurfaceExpansion, t, phi, eps):
    """Surface point for scalar ``t, phi``."""
    x, y = torus_point_grid(se, [float(t)], [float(phi)], eps)
    return float(x[0, 0]), float(y[0, 0])


@dataclass
class SurfaceMesh:
    t: np.ndarray
    phi: np.ndarray
    x: np.ndarray
    y: np.ndarray
    header: dict

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "phi", "x", "y"])
            for i, tt in enumerate(self.t):
                for j, pp in enumerate(self.phi):
                    w.writerow([f"{v:.17g}" for v in (tt, pp, self.x[i, j], self.y[i, j])])

    def write_header(self, path, extra=None):
        h = dict(self.header)
        if extra:
            h.update(extra)
        with open(path, "w") as fh:
            json.dump(h, fh, indent=2)


def surface_mesh(se: SurfaceExpansion, nt=64, nphi=256, eps=0.01) -> SurfaceMesh:
    """Tabulate the surface on ``[0, T) x [0, omega)``."""
    if nt < 8 or nphi < 8:
        raise DomainError("mesh sizes must be at least 8")
    if not 0 <= eps <= se.cfg.eps_max:
        raise DomainError(f"eps must lie in [0, eps_max = {se.cfg.eps_max}]")
    T = se.cfg.period_T
    t = T * np.arange(nt) / nt
    phi = se.orbit.omega * np.arange(nphi) / nphi
    x, y = torus_point_grid(se, t, phi, eps)
    return SurfaceMesh(t, phi, x, y, se.header(eps))


# ---------------------------------------------------------------------------
# winding numbers

def winding_number(xc, yc, px, py):
    """Winding number of the closed polygon ``(xc, yc)`` about ``(px, py)``."""
    ang = np.arctan2(np.asarray(yc) - py, np.asarray(xc) - px)
    d = np.diff(np.concatenate([ang, ang[:1]]))
    d = (d + np.pi) % (2.0 * np.pi) - np.pi
    return int(np.rint(d.sum() / (2.0 * np.pi)))


def enclosed_equilibria(xc, yc):
    """Equilibria with nonzero winding number for the closed curve."""
    return [e for e in EQUILIBRIA if winding_number(xc, yc, *e) != 0]
