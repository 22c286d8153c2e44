"""Polynomial perturbations with trigonometric time dependence.

``X(t, x, y, eps) = sum X^{(m,n)}(t) x^m y^n + eps sum X_eps^{(m,n)}(t) x^m y^n``
and likewise for ``Y``.  Each coefficient is a finite Fourier series of
period ``T``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _fourier
from .errors import ConfigError, PreconditionError

MAX_DEGREE = 12
TARGETS = ("X", "Y", "X_eps", "Y_eps")


@dataclass(frozen=True)
class Harmonic:
    j: int
    cos: float = 0.0
    sin: float = 0.0


@dataclass(frozen=True)
class PeriodicCoefficient:
    """``mean + sum_j (cos_j cos(2 pi j t / T) + sin_j sin(2 pi j t / T))``."""

    mean: float = 0.0
    harmonics: tuple = ()

    def __post_init__(self):
        for h in self.harmonics:
            if not (isinstance(h.j, int) and h.j >= 1):
                raise ConfigError(f"harmonic index must be an integer >= 1, got {h.j!r}")

    def __call__(self, t, T):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, float(self.mean))
        for h in self.harmonics:
            w = 2.0 * np.pi * h.j * t / T
            out = out + h.cos * np.cos(w) + h.sin * np.sin(w)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class Term:
    target: str
    m: int
    n: int
    coeff: PeriodicCoefficient

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ConfigError(f"unknown target {self.target!r}")
        if self.m < 0 or self.n < 0:
            raise ConfigError("monomial exponents must be non-negative")


@dataclass(frozen=True)
class Perturbation:
    """Perturbing field; ``terms`` hold the ``eps = 0`` part, ``eps_terms`` the linear part."""

    terms: tuple = ()
    eps_terms: tuple = ()
    period_T: float = 1.0
    max_degree: int = MAX_DEGREE

    def __post_init__(self):
        for t in self.terms:
            if t.target not in ("X", "Y"):
                raise ConfigError("terms must target X or Y")
        for t in self.eps_terms:
            if t.target not in ("X", "Y"):
                raise ConfigError("eps_terms must target X or Y")
        for t in self.all_terms():
            if t.m + t.n > self.max_degree:
                raise ConfigError(f"term x^{t.m} y^{t.n} exceeds max_degree {self.max_degree}")
        if not self.period_T > 0:
            raise ConfigError("period_T must be positive")

    def all_terms(self):
        return tuple(self.terms) + tuple(self.eps_terms)

    @property
    def is_zero(self):
        return not self.all_terms()

    @property
    def time_independent(self):
        return all(not t.coeff.harmonics for t in self.all_terms())

    def means(self, target):
        """``{(m, n): mean}`` of the ``eps = 0`` coefficients of ``target``."""
        out = {}
        for t in self.terms:
            if t.target == target:
                out[(t.m, t.n)] = out.get((t.m, t.n), 0.0) + t.coeff.mean
        return out

    def __add__(self, other):
        if not isinstance(other, Perturbation):
            return NotImplemented
        if other.period_T != self.period_T:
            raise ConfigError("cannot add perturbations with different periods")
        return Perturbation(self.terms + other.terms, self.eps_terms + other.eps_terms,
                            self.period_T, max(self.max_degree, other.max_degree))

    def scaled(self, c):
        def sc(t):
            h = tuple(Harmonic(x.j, c * x.cos, c * x.sin) for x in t.coeff.harmonics)
            return Term(t.target, t.m, t.n, PeriodicCoefficient(c * t.coeff.mean, h))
        return Perturbation(tuple(map(sc, self.terms)), tuple(map(sc, self.eps_terms)),
                            self.period_T, self.max_degree)

    # -- serialization ------------------------------------------------------

    def to_dict(self):
        out = {k: [] for k in TARGETS}
        for t in self.terms:
            out[t.target].append(_term_dict(t))
        for t in self.eps_terms:
            out[t.target + "_eps"].append(_term_dict(t))
        return out

    @classmethod
    def from_dict(cls, d, period_T=1.0, max_degree=MAX_DEGREE):
        if not isinstance(d, dict):
            raise ConfigError("perturbation must be a JSON object")
        extra = set(d) - set(TARGETS) - {"period_T"}
        if extra:
            raise ConfigError(f"unknown perturbation keys: {sorted(extra)}")
        period_T = float(d.get("period_T", period_T))
        terms, eps_terms = [], []
        for key in TARGETS:
            for e in d.get(key, []):
                base = key.split("_")[0]
                term = _term_from(base, e)
                (eps_terms if key.endswith("_eps") else terms).append(term)
        return cls(tuple(terms), tuple(eps_terms), period_T, max_degree)

    @classmethod
    def load(cls, path, period_T=1.0):
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read perturbation {path}: {exc}") from exc
        return cls.from_dict(data, period_T=period_T)

    # -- kernel packing -----------------------------------------------------

    def packed(self):
        """Flat arrays consumed by the integration kernels."""
        target, m, n, mean, hstart, hcount, hj, hc, hs = ([] for _ in range(9))
        code = {"X": 0, "Y": 1}
        for group, off in ((self.terms, 0), (self.eps_terms, 2)):
            for t in group:
                target.append(code[t.target] + off)
                m.append(t.m)
                n.append(t.n)
                mean.append(t.coeff.mean)
                hstart.append(len(hj))
                hcount.append(len(t.coeff.harmonics))
                for h in t.coeff.harmonics:
                    hj.append(h.j)
                    hc.append(h.cos)
                    hs.append(h.sin)
        ia = lambda v: np.asarray(v, dtype=np.intc)
        fa = lambda v: np.asarray(v, dtype=float)
        return (ia(target), ia(m), ia(n), fa(mean), ia(hstart), ia(hcount),
                ia(hj), fa(hc), fa(hs), 2.0 * math.pi / self.period_T)


def _term_dict(t):
    return {"m": t.m, "n": t.n, "mean": t.coeff.mean,
            "harmonics": [{"j": h.j, "cos": h.cos, "sin": h.sin} for h in t.coeff.harmonics]}


def _term_from(target, e):
    try:
        harm = tuple(Harmonic(int(h["j"]), float(h.get("cos", 0.0)), float(h.get("sin", 0.0)))
                     for h in e.get("harmonics", []))
        return Term(target, int(e["m"]), int(e["n"]),
                    PeriodicCoefficient(float(e.get("mean", 0.0)), harm))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed perturbation term {e!r}: {exc}") from exc


def monomial(target, m, n, mean=0.0, harmonics=(), period_T=1.0, eps=False):
    """Perturbation with a single term."""
    t = Term(target, m, n, PeriodicCoefficient(mean, tuple(harmonics)))
    return Perturbation((), (t,), period_T) if eps else Perturbation((t,), (), period_T)


def example_s6(period_T=1.0):
    """Time-independent example: ``X = 0``,
    ``Y = 4.57 y - 1.66 y^3 - 0.855 x y + 0.513 y^2``."""
    coef = [((0, 1), 4.57), ((0, 3), -1.66), ((1, 1), -0.855), ((0, 2), 0.513)]
    terms = tuple(Term("Y", m, n, PeriodicCoefficient(c)) for (m, n), c in coef)
    return Perturbation(terms, (), period_T)


def _poly(group, target, t, x, y, T, dx=0, dy=0):
    out = 0.0
    for term in group:
        if term.target != target:
            continue
        m, n = term.m, term.n
        if m < dx or n < dy:
            continue
        fm = math.perm(m, dx) if dx else 1
        fn = math.perm(n, dy) if dy else 1
        out = out + term.coeff(t, T) * fm * fn * x ** (m - dx) * y ** (n - dy)
    return out


def _shape(v, *args):
    return np.broadcast_to(np.asarray(v, dtype=float), np.broadcast(*args).shape) + 0.0


def eval_xy(p: Perturbation, t, x, y, eps=0.0):
    """``(X, Y)`` at ``(t, x, y, eps)``; broadcasts over array inputs."""
    t, x, y = (np.asarray(v, dtype=float) for v in (t, x, y))
    T = p.period_T
    X = _poly(p.terms, "X", t, x, y, T) + eps * _poly(p.eps_terms, "X", t, x, y, T)
    Y = _poly(p.terms, "Y", t, x, y, T) + eps * _poly(p.eps_terms, "Y", t, x, y, T)
    return _shape(X, t, x, y), _shape(Y, t, x, y)


def eval_partials(p: Perturbation, t, x, y):
    """Exact ``(X_x, X_y, Y_x, Y_y, X_eps, Y_eps)`` at ``eps = 0``."""
    t, x, y = (np.asarray(v, dtype=float) for v in (t, x, y))
    T = p.period_T
    vals = (_poly(p.terms, "X", t, x, y, T, dx=1), _poly(p.terms, "X", t, x, y, T, dy=1),
            _poly(p.terms, "Y", t, x, y, T, dx=1), _poly(p.terms, "Y", t, x, y, T, dy=1),
            _poly(p.eps_terms, "X", t, x, y, T), _poly(p.eps_terms, "Y", t, x, y, T))
    return tuple(_shape(v, t, x, y) for v in vals)


@dataclass(frozen=True, eq=False)
class SliceFunctions:
    """Perturbation data along the generating orbit on a ``(t, phi)`` grid.

    Arrays have shape ``(nt, nphi)``; ``t`` runs over ``[0, T)`` and ``phi``
    over ``[0, omega)``.
    """

    t: np.ndarray
    phi: np.ndarray
    T: float
    omega: float
    R: np.ndarray
    Phi: np.ndarray
    R_r: np.ndarray
    R_eps: np.ndarray
    orbit_arrays: dict = field(default_factory=dict)


def _orbit_arrays(orbit, alpha, nphi):
    if nphi == orbit.n:
        return dict(phi=orbit.phi, C=orbit.C, S=orbit.S, dC=orbit.dC, dS=orbit.dS,
                    alpha=alpha.values, dalpha=alpha.dvalues)
    from .monotonicity import alpha_algebraic, alpha_derivative
    from .orbit import orbit_eval
    phi = orbit.omega * np.arange(nphi) / nphi
    C, S, _, _ = orbit_eval(orbit, phi)
    g = orbit.spec.gamma
    k, l = orbit.k, orbit.l
    return dict(phi=phi, C=C, S=S, dC=g * (S ** 3 - S), dS=-(C ** 3 - C),
                alpha=alpha_algebraic(C, S, orbit.spec.a, g, k, l),
                dalpha=alpha_derivative(C, S, g, k, l))


def _fill(p, t, arr, k, l):
    tt = t[:, None]
    C, S, dC, dS, al = (arr[key][None, :] for key in ("C", "S", "dC", "dS", "alpha"))
    X, Y = eval_xy(p, tt, C, S, 0.0)
    Xx, Xy, Yx, Yy, Xe, Ye = eval_partials(p, tt, C, S)
    Ck = C - k
    Sl = S - l
    R = dC * Y - dS * X
    Phi = (Sl * X - Ck * Y) / al
    R_r = dC * (Ck * Yx + Sl * Yy) - dS * (Ck * Xx + Sl * Xy)
    R_eps = dC * Ye - dS * Xe
    shape = (t.size, arr["phi"].size)
    return tuple(np.broadcast_to(v, shape).copy() for v in (R, Phi, R_r, R_eps))


def slice_functions(p: Perturbation, orbit, alpha, nt=64, nphi=None, energy_tol=1e-10,
                    max_n=1024) -> SliceFunctions:
    """Tabulate ``R, Phi, R_r, R_eps`` along the orbit.

    ``nphi`` defaults to the orbit grid.  Either size doubles (to ``max_n``)
    while the trailing quarter of the spectrum holds more than ``energy_tol``
    of the energy of any slice.
    """
    if alpha.sign == "mixed":
        raise PreconditionError("alpha changes sign: the polar change is not valid")
    if nphi is None:
        nphi = orbit.n
    for v in (nt, nphi):
        if v < 2 or v & (v - 1):
            raise PreconditionError("grid sizes must be powers of two")
    k, l = orbit.k, orbit.l
    T = p.period_T
    while True:
        arr = _orbit_arrays(orbit, alpha, nphi)
        t = T * np.arange(nt) / nt
        R, Phi, R_r, R_eps = _fill(p, t, arr, k, l)
        et = max(_fourier.tail_energy(v.T) for v in (R, Phi, R_r, R_eps))
        ep = max(_fourier.tail_energy(v) for v in (R, Phi, R_r, R_eps))
        grow_t = et > energy_tol and nt < max_n
        grow_p = ep > energy_tol and nphi < max_n
        if not (grow_t or grow_p):
            break
        nt = nt * 2 if grow_t else nt
        nphi = nphi * 2 if grow_p else nphi
    return SliceFunctions(t=t, phi=arr["phi"], T=T, omega=orbit.omega, R=R, Phi=Phi,
                          R_r=R_r, R_eps=R_eps, orbit_arrays=arr)
