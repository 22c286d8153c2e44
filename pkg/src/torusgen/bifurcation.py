"""Generating equation, root scans, and admissibility of generating orbits."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._contour import build_contour, contour_moment
from .averaging import averaged_coefficients
from .errors import (DissipativityError, DomainError, MonotonicityUnavailable,
                     PreconditionError, TorusgenError)
from .model import OrbitClass, SystemConfig, class_interval, make_orbit_spec
from .monotonicity import alpha_profile
from .orbit import SEPARATRIX_GUARD, ToleranceOpts, integrate_orbit, period_quadrature
from .perturbation import Perturbation, eval_xy, slice_functions

REPORT_THRESHOLD = 1e-5


def _r_values(p, orbit, nt):
    T = p.period_T
    t = T * np.arange(nt) / nt
    X, Y = eval_xy(p, t[:, None], orbit.C[None, :], orbit.S[None, :], 0.0)
    return orbit.dC[None, :] * Y - orbit.dS[None, :] * X


def _nt_for(p):
    jmax = max((h.j for t in p.terms for h in t.coeff.harmonics), default=0)
    n = 4
    while n <= 2 * jmax:
        n *= 2
    return n


def generating_value_direct(p: Perturbation, spec, cfg: SystemConfig, opts=None,
                            orbit=None) -> float:
    """Double average of ``R = C' Y - S' X`` over ``[0, T) x [0, omega)``."""
    if orbit is None:
        orbit = integrate_orbit(spec, cfg, opts)
    if p.is_zero:
        return 0.0
    return float(np.mean(_r_values(p, orbit, _nt_for(p))))


def series_terms(p: Perturbation):
    """``{(m, n): P^{(m,n)}}`` with ``P = (m+1)/n Xbar^{(m+1,n-1)} + Ybar^{(m,n)}``.

    Comes from ``int (Y dC - X dS)`` around the orbit after integrating the
    X-part by parts; only ``n >= 1`` contributes.
    """
    X = p.means("X")
    Y = p.means("Y")
    P = {}
    for (m, n), c in Y.items():
        if n >= 1 and c != 0.0:
            P[(m, n)] = P.get((m, n), 0.0) + c
    for (m1, n1), c in X.items():
        if m1 >= 1 and c != 0.0:
            m, n = m1 - 1, n1 + 1
            P[(m, n)] = P.get((m, n), 0.0) + m1 / n * c
    return P


def moment_survives(cls: OrbitClass, m, n):
    """Parity selection: which contour moments can be nonzero."""
    if cls.number == 0:
        return m % 2 == 0 and n % 2 == 1
    if cls.number == 1:
        return n % 2 == 1
    return True


def generating_value_series(p: Perturbation, spec, cfg: SystemConfig, return_terms=False):
    """``R_bar = omega^-1 sum P^{(m,n)} I^{mn}`` with contour moments by quadrature."""
    cls = spec.cls
    ct = build_contour(cls.k, cls.l, cls.branch, spec.b, spec.a, cfg.gamma)
    omega = period_quadrature(spec, cfg)
    terms = []
    for (m, n), P in sorted(series_terms(p).items()):
        I = contour_moment(ct, m, n) if moment_survives(cls, m, n) else 0.0
        terms.append((m, n, P, I))
    val = math.fsum(P * I for _, _, P, I in terms) / omega
    return (val, terms) if return_terms else val


# ---------------------------------------------------------------------------
# scans

@dataclass
class GeneratingScan:
    cls: OrbitClass
    b: np.ndarray
    values: np.ndarray          # T * omega * R_bar
    brackets: list
    refined: list = field(default_factory=list)
    fine: dict = field(default_factory=dict)
    threshold: float = REPORT_THRESHOLD

    def to_dict(self):
        return {"class": self.cls.label,
                "brackets": [list(b) for b in self.brackets],
                "refined": [list(b) for b in self.refined]}

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["b", "value"])
            rows = list(zip(self.b, self.values))
            for br, (bb, vv) in self.fine.items():
                rows.extend(zip(bb, vv))
            for b, v in sorted(set((float(x), float(y)) for x, y in rows)):
                w.writerow([f"{b:.17g}", f"{v:.17g}"])


def scaled_value(p, cls, b, cfg, opts=None):
    """``T * omega * R_bar(b)``."""
    spec = make_orbit_spec(cls, b, cfg, guard=SEPARATRIX_GUARD)
    orbit = integrate_orbit(spec, cfg, opts)
    return p.period_T * orbit.omega * generating_value_direct(p, spec, cfg, orbit=orbit)


def _grid(lo, hi, step):
    """Multiples of ``step`` strictly inside ``(lo, hi)``, rounded to the step's decimals."""
    digits = max(0, -int(math.floor(math.log10(step))) + 2)
    j0 = math.floor(lo / step) + 1
    j1 = math.ceil(hi / step) - 1
    pts = [round(j * step, digits) for j in range(j0, j1 + 1)]
    return [x for x in pts if lo + SEPARATRIX_GUARD < x < hi - SEPARATRIX_GUARD]


def _brackets(bs, vs, thr):
    sig = [(b, v) for b, v in zip(bs, vs) if abs(v) > thr]
    return [(b0, b1) for (b0, v0), (b1, v1) in zip(sig, sig[1:]) if v0 * v1 < 0]


def _eval_many(p, cls, cfg, mags, jobs, opts):
    sgn = -1.0 if cls.k < 0 else 1.0
    f = lambda m: scaled_value(p, cls, sgn * m, cfg, opts)
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            return np.array(list(ex.map(f, mags)))
    return np.array([f(m) for m in mags])


def scan_roots(p: Perturbation, cls: OrbitClass, cfg: SystemConfig, step=1e-2,
               refine=True, threshold=REPORT_THRESHOLD, jobs=1, opts=None) -> GeneratingScan:
    """Sample ``T omega R_bar`` on a grid of ``|b|`` and collect sign changes.

    The grid consists of multiples of ``step`` inside the class interval.
    Brackets join consecutive grid values of opposite sign whose magnitudes
    exceed ``threshold``; with ``refine`` each bracket is re-scanned at
    ``step / 10``.  Brackets are reported by ``|b|``.
    """
    if not step > 0:
        raise DomainError("step must be positive")
    lo, hi = class_interval(cls, cfg)
    alo, ahi = (abs(hi), abs(lo)) if cls.k < 0 else (lo, hi)
    mags = _grid(alo, ahi, step)
    vals = _eval_many(p, cls, cfg, mags, jobs, opts)
    br = _brackets(mags, vals, threshold)
    scan = GeneratingScan(cls, np.array(mags), vals, br, threshold=threshold)
    if refine:
        fine_step = step / 10.0
        for b0, b1 in br:
            fm = [b0] + [x for x in _grid(b0, b1, fine_step)] + [b1]
            fv = _eval_many(p, cls, cfg, fm[1:-1], jobs, opts)
            v0 = vals[mags.index(b0)]
            v1 = vals[mags.index(b1)]
            fv = np.concatenate([[v0], fv, [v1]])
            scan.fine[(b0, b1)] = (np.array(fm), fv)
            scan.refined.extend(_brackets(fm, fv, threshold))
    return scan


def refine_root(p: Perturbation, cls: OrbitClass, bracket, cfg: SystemConfig, tol=1e-13,
                xtol=1e-10, opts=None, max_iter=200):
    """Bisection on ``R_bar`` over a signed bracket of ``b`` values (``|b|`` also accepted)."""
    b0, b1 = (float(x) for x in bracket)
    if cls.k < 0 and b0 > 0 and b1 > 0:
        b0, b1 = -b0, -b1
    if b0 == b1:
        raise PreconditionError("degenerate bracket")
    f = lambda b: generating_value_direct(p, make_orbit_spec(cls, b, cfg, SEPARATRIX_GUARD), cfg, opts)
    f0, f1 = f(b0), f(b1)
    if f0 == 0.0:
        return b0
    if f1 == 0.0:
        return b1
    if f0 * f1 > 0:
        raise PreconditionError("bracket endpoints have the same sign")
    for _ in range(max_iter):
        mid = 0.5 * (b0 + b1)
        fm = f(mid)
        if fm == 0.0 or abs(fm) < tol or abs(b1 - b0) < xtol:
            return mid
        if fm * f0 < 0:
            b1, f1 = mid, fm
        else:
            b0, f0 = mid, fm
    return 0.5 * (b0 + b1)


# ---------------------------------------------------------------------------
# Siegel condition

@dataclass
class SiegelReport:
    T: float
    omega: float
    K: float
    tau: float
    N: int
    min_margin: float
    argmin: tuple
    passed: bool
    resonances: list

    def to_dict(self):
        return {"T": self.T, "omega": self.omega, "K": self.K, "tau": self.tau, "N": self.N,
                "min_margin": self.min_margin, "argmin": list(self.argmin),
                "passed": self.passed, "resonances": [list(r) for r in self.resonances]}


def siegel_check(T, omega, K=None, tau=2.0, N=1000, resonance_tol=1e-12) -> SiegelReport:
    """Check ``|p T - q omega| (p + q)^tau > K`` for ``p, q >= 1``, ``p + q <= N``.

    With ``K=None`` the bound is half the observed minimum, so the check
    reduces to the absence of exact resonances.
    """
    if N < 2 or tau < 1 or (K is not None and K <= 0):
        raise DomainError("need N >= 2, tau >= 1 and K > 0")
    p = np.arange(1, N)[:, None]
    q = np.arange(1, N)[None, :]
    ok = (p + q) <= N
    gap = np.abs(p * T - q * omega)
    margin = np.where(ok, gap * (p + q) ** float(tau), np.inf)
    i, j = np.unravel_index(np.argmin(margin), margin.shape)
    mn = float(margin[i, j])
    res_mask = ok & (gap <= resonance_tol * max(abs(T), abs(omega)) * (p + q))
    resonances = [(int(a + 1), int(b + 1)) for a, b in zip(*np.nonzero(res_mask))][:20]
    if K is None:
        K = 0.5 * mn
    passed = (not resonances) and mn > K and K > 0
    return SiegelReport(T, omega, K, tau, N, mn, (int(i + 1), int(j + 1)), passed, resonances)


# ---------------------------------------------------------------------------
# admissibility

@dataclass
class AdmissibleResult:
    cls: OrbitClass
    nu: int
    b_star: float | None
    omega_star: float | None
    L: float | None
    siegel_margin: float | None
    flags: dict
    R_bar: float | None = None
    L0: float | None = None
    L1: float | None = None
    siegel: SiegelReport | None = None
    notes: list = field(default_factory=list)
    avg: object = None

    @property
    def admissible(self):
        return all(self.flags.values())

    def to_dict(self):
        return {"class": self.cls.label, "nu": self.nu, "b_star": self.b_star,
                "omega_star": self.omega_star, "L": self.L, "L0": self.L0, "L1": self.L1,
                "R_bar": self.R_bar, "siegel_margin": self.siegel_margin,
                "siegel": self.siegel.to_dict() if self.siegel else None,
                "flags": dict(self.flags), "admissible": self.admissible,
                "notes": list(self.notes)}


def assess_admissibility(p: Perturbation, cls: OrbitClass, cfg: SystemConfig, bracket=None,
                         b_star=None, opts=None, root_tol=1e-7, L_floor=1e-6,
                         siegel_K=None, siegel_tau=2.0, siegel_N=1000, nt=64):
    """Check the four conditions of admissibility for one candidate root.

    Either ``bracket`` (refined by bisection) or ``b_star`` must be given.
    Failures are recorded in ``flags`` and ``notes``; nothing is raised for
    numerical conditions that do not hold.
    """
    flags = {"root_ok": False, "alpha_ok": False, "siegel_ok": False, "dissipativity_ok": False}
    res = AdmissibleResult(cls, cfg.nu, None, None, None, None, flags)
    if b_star is None:
        if bracket is None:
            raise PreconditionError("give a bracket or b_star")
        b_star = refine_root(p, cls, bracket, cfg, opts=opts)
    res.b_star = float(b_star)
    try:
        spec = make_orbit_spec(cls, b_star, cfg, guard=SEPARATRIX_GUARD)
        orbit = integrate_orbit(spec, cfg, opts)
    except TorusgenError as exc:
        res.notes.append(f"orbit: {exc}")
        return res
    res.omega_star = orbit.omega
    R = _r_values(p, orbit, _nt_for(p)) if not p.is_zero else np.zeros((1, orbit.n))
    res.R_bar = float(R.mean())
    scale = float(np.mean(np.abs(R)))
    flags["root_ok"] = abs(res.R_bar) <= root_tol * scale or abs(res.R_bar) < 1e-14
    try:
        lo, hi = class_interval(cls, cfg)
        inside = lo < b_star < hi
    except MonotonicityUnavailable as exc:
        inside = False
        res.notes.append(str(exc))
    alpha = alpha_profile(orbit)
    flags["alpha_ok"] = inside and alpha.sign != "mixed"
    if cfg.nu == 0:
        res.siegel = siegel_check(p.period_T, orbit.omega, siegel_K, siegel_tau, siegel_N)
        res.siegel_margin = res.siegel.min_margin
        flags["siegel_ok"] = res.siegel.passed
    else:
        flags["siegel_ok"] = True
    if alpha.sign == "mixed":
        res.notes.append("alpha changes sign: averaging not applicable")
        return res
    try:
        sl = slice_functions(p, orbit, alpha, nt=nt)
        avg = averaged_coefficients(orbit, alpha, sl, cfg.nu, L_floor=L_floor,
                                    root_tol=max(root_tol, 1.0), require_dissipative=False)
    except TorusgenError as exc:
        res.notes.append(f"averaging: {exc}")
        return res
    res.avg = avg
    res.L0, res.L1 = avg.L0, avg.L1
    res.L = avg.L
    flags["dissipativity_ok"] = bool(abs(avg.L) >= L_floor)
    if not flags["dissipativity_ok"]:
        res.notes.append(f"|L| = {abs(avg.L):.3g} below {L_floor}")
    return res
