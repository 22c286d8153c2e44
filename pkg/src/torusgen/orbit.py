"""Periodic orbits of the unperturbed flow.

Orbits are found by integrating from ``(b, l)`` until the first transversal
return, then resampled on a uniform grid in the time-like parameter ``phi``.
Periods are computed a second, independent way from the closed-form level
curves by singular quadrature.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from . import _fourier
from ._backend import kernels
from ._contour import build_contour, contour_period
from .errors import AccuracyError, DomainError, NotClosedError
from .model import OrbitSpec, SystemConfig, first_integral, make_orbit_spec

SEPARATRIX_GUARD = 1e-4


@dataclass(frozen=True)
class ToleranceOpts:
    """Accuracy controls for orbit integration."""

    rtol: float = 1e-12
    atol: float = 1e-14
    energy_tol: float = 1e-10
    closure_tol: float = 1e-9
    interp_tol: float = 1e-9
    n_min: int = 256
    n_max: int = 8192
    phi_max: float = 1000.0
    max_steps: int = 10_000_000


@dataclass(frozen=True, eq=False)
class ParametrizedOrbit:
    """Uniform samples of one period of ``(C, S)`` and its Fourier interpolant."""

    spec: OrbitSpec
    omega: float
    phi: np.ndarray
    C: np.ndarray
    S: np.ndarray
    dC: np.ndarray
    dS: np.ndarray
    closure_error: float
    energy_error: float
    interp_error: float
    opts: ToleranceOpts = field(default_factory=ToleranceOpts)

    @property
    def n(self):
        return self.phi.size

    @property
    def k(self):
        return self.spec.cls.k

    @property
    def l(self):
        return self.spec.cls.l

    def coeffs(self):
        return _fourier.rcoeffs(self.C), _fourier.rcoeffs(self.S)

    def eval(self, phi):
        return orbit_eval(self, phi)

    def header(self):
        s = self.spec
        return {
            "class": s.cls.label, "k": s.cls.k, "l": s.cls.l, "b": s.b,
            "gamma": s.gamma, "a": s.a, "mu": s.mu, "omega": self.omega,
            "n": self.n, "closure_error": self.closure_error,
            "energy_error": self.energy_error, "interp_error": self.interp_error,
            "tolerances": asdict(self.opts),
        }

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["phi", "C", "S", "dC", "dS"])
            for row in zip(self.phi, self.C, self.S, self.dC, self.dS):
                w.writerow([f"{v:.17g}" for v in row])


def _sample(spec, gamma, omega, n, opts, rtol):
    """Integrate one period with outputs at ``j omega / n``, j = 1..n."""
    ts = omega * np.arange(1, n + 1) / n
    out, filled, status, t_last, _ = kernels.flow(
        np.array(spec.start), 0.0, ts, gamma, 0, 0.0, None,
        rtol, opts.atol, math.inf, math.inf, opts.max_steps)
    if status != 0:
        raise AccuracyError(f"orbit integration stopped with status {status} at t={t_last}")
    # last output is the return to the start point
    xy = np.vstack([np.array(spec.start)[None, :], out[:-1]])
    return xy, out[-1]


def integrate_orbit(spec: OrbitSpec, cfg: SystemConfig, opts: ToleranceOpts | None = None
                    ) -> ParametrizedOrbit:
    """Integrate and resample the periodic orbit described by ``spec``.

    The grid size starts at ``opts.n_min`` and doubles until the Fourier
    interpolant built from the even points reproduces the odd points to
    ``opts.interp_tol``.
    """
    opts = opts or ToleranceOpts()
    try:
        return _integrate(spec, cfg, opts, opts.rtol)
    except AccuracyError:
        # orbits near a separatrix pass close to a saddle, where local errors
        # are amplified; retry once with a tighter integrator tolerance
        if opts.rtol <= 1e-13:
            raise
        return _integrate(spec, cfg, opts, opts.rtol / 20.0)


def _integrate(spec, cfg, opts, rtol):
    g = cfg.gamma
    b, l = spec.start
    omega, status, _, _, _ = kernels.return_time(
        b, l, g, opts.phi_max, rtol, opts.atol,
        max(1e3 * opts.closure_tol, 1e-6), opts.max_steps)
    if status != 0 or not math.isfinite(omega):
        raise NotClosedError(
            f"no return to ({b}, {l}) within phi_max={opts.phi_max} (status {status})")
    n = opts.n_min
    while True:
        xy2, end = _sample(spec, g, omega, 2 * n, opts, rtol)
        even, odd = xy2[0::2], xy2[1::2]
        err = max(np.max(np.abs(_fourier.shift_samples(even[:, 0], 0.5) - odd[:, 0])),
                  np.max(np.abs(_fourier.shift_samples(even[:, 1], 0.5) - odd[:, 1])))
        if err < opts.interp_tol or 2 * n > opts.n_max:
            break
        n *= 2
    if err >= opts.interp_tol:
        raise AccuracyError(f"interpolant residual {err:.3g} at n_max={opts.n_max}")
    # keep the finer grid: it is already computed and passed the check
    C, S = xy2[:, 0].copy(), xy2[:, 1].copy()
    closure = float(math.hypot(end[0] - b, end[1] - l))
    if closure > opts.closure_tol:
        raise AccuracyError(f"orbit does not close: |z(omega) - z(0)| = {closure:.3g}")
    energy = float(np.max(np.abs(first_integral(C, S, g) - spec.a)))
    if energy > opts.energy_tol:
        raise AccuracyError(f"energy drift {energy:.3g} exceeds {opts.energy_tol}")
    N = C.size
    phi = omega * np.arange(N) / N
    return ParametrizedOrbit(
        spec=spec, omega=float(omega), phi=phi, C=C, S=S,
        dC=g * (S ** 3 - S), dS=-(C ** 3 - C),
        closure_error=closure, energy_error=energy, interp_error=float(err),
        opts=opts)


def orbit_for(cls, b, cfg, opts=None):
    """Convenience: validate ``b`` with the separatrix guard and integrate."""
    spec = make_orbit_spec(cls, b, cfg, guard=SEPARATRIX_GUARD)
    return integrate_orbit(spec, cfg, opts)


def orbit_eval(orbit: ParametrizedOrbit, phi):
    """``(C, S, C', S')`` from the trigonometric interpolant at ``phi``.

    Derivatives are spectral, so they agree with the vector field only to the
    interpolation accuracy.
    """
    cC, cS = orbit.coeffs()
    w = orbit.omega
    return (_fourier.evaluate(cC, phi, w), _fourier.evaluate(cS, phi, w),
            _fourier.evaluate(cC, phi, w, 1), _fourier.evaluate(cS, phi, w, 1))


def period_quadrature(spec: OrbitSpec, cfg: SystemConfig) -> float:
    """Period from the sum of arc integrals of ``zeta_+-(C^2)``."""
    ct = build_contour(spec.cls.k, spec.cls.l, spec.cls.branch, spec.b, spec.a, cfg.gamma)
    sep = (cfg.gamma, 1.0) if spec.cls.k == 0 or spec.cls.l == 0 else (0.0,)
    if any(abs(spec.a - s) < 1e-14 for s in sep):
        raise DomainError("separatrix level: the period integral diverges")
    return contour_period(ct)


def half_periods(spec: OrbitSpec, cfg: SystemConfig):
    """Per-arc times; the first half of the arcs covers the half period."""
    from ._contour import arc_time
    ct = build_contour(spec.cls.k, spec.cls.l, spec.cls.branch, spec.b, spec.a, cfg.gamma)
    return [arc_time(ct, arc) for arc in ct.arcs]


def orientation(orbit: ParametrizedOrbit) -> str:
    """'ccw' or 'cw' around ``(k, l)`` from the cross product at ``phi = 0``."""
    ck = orbit.C[0] - orbit.k
    sl = orbit.S[0] - orbit.l
    cross = ck * orbit.dS[0] - sl * orbit.dC[0]
    return "ccw" if cross > 0 else "cw"


def write_orbit(orbit: ParametrizedOrbit, csv_path, json_path=None, extra=None):
    orbit.write_csv(csv_path)
    if json_path is not None:
        hdr = orbit.header()
        if extra:
            hdr.update(extra)
        with open(json_path, "w") as fh:
            json.dump(hdr, fh, indent=2)
