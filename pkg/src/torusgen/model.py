"""System configuration, orbit classes and closed-form quantities.

The unperturbed flow is ``C' = gamma (S^3 - S)``, ``S' = -(C^3 - C)`` with the
first integral ``(C^2 - 1)^2 + gamma (S^2 - 1)^2``.  Periodic orbits are
grouped by the equilibrium ``(k, l)`` they surround; class 0 splits into the
inner (``0i``) and outer (``0e``) families around the origin.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, asdict
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError, MonotonicityUnavailable

GAMMA_STAR = 0.806
BOUNDARY_TOL = 1e-12

#: Internal tolerance used when the class-1 admissibility interval is shrunk
#: by the class-1 sign bounds; see :func:`class_interval`.
GAMMA_STAR_SLACK = 1e-3


@dataclass(frozen=True)
class SystemConfig:
    """Parameters of the planar system.

    Attributes
    ----------
    gamma : float
        Coupling in ``(0, 1]``.
    nu : int
        Time-scale exponent, 0 or 1.
    period_T : float
        Period of the time dependence in the perturbation.
    Mx, My : float
        Half-widths of the rectangle ``|x| < Mx, |y| < My``.
    eps_max : float
        Largest admissible perturbation size.
    """

    gamma: float
    nu: int = 0
    period_T: float = 1.0
    Mx: float = 2.0
    My: float = 2.0
    eps_max: float = 0.1

    def __post_init__(self):
        g = self.gamma
        if not (isinstance(g, (int, float)) and 0.0 < g <= 1.0):
            raise ConfigError(f"gamma must lie in (0, 1], got {g!r}")
        if self.nu not in (0, 1):
            raise ConfigError(f"nu must be 0 or 1, got {self.nu!r}")
        if not self.period_T > 0.0:
            raise ConfigError("period_T must be positive")
        if not self.eps_max > 0.0:
            raise ConfigError("eps_max must be positive")
        u_e = math.sqrt(1.0 + g ** -0.5)
        if self.Mx <= 1.0 or self.My <= u_e:
            raise ConfigError(
                f"rectangle too small: need Mx > 1 and My > u_e = {u_e:.6g}")
        if self.M <= 1.0:
            raise ConfigError(
                f"energy bound M = {self.M:.6g} must exceed 1; enlarge Mx or My")

    @property
    def M(self) -> float:
        """Largest energy level whose orbit stays inside the rectangle."""
        return min(self.gamma * (self.My ** 2 - 1.0) ** 2,
                   (self.Mx ** 2 - 1.0) ** 2)

    @classmethod
    def default(cls, gamma, **kw):
        """Configuration with a rectangle large enough for every class."""
        ok = isinstance(gamma, (int, float)) and gamma > 0
        my = max(2.0, math.sqrt(1.0 + 2.0 / math.sqrt(gamma))) if ok else 2.0
        kw.setdefault("My", my)
        return cls(gamma=gamma, **kw)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown configuration keys: {sorted(extra)}")
        if "gamma" not in d:
            raise ConfigError("configuration needs 'gamma'")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path):
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        return cls.from_dict(data)


# ---------------------------------------------------------------------------
# orbit classes

_LABELS = {
    "0i": (0, 0, "inner"),
    "0e": (0, 0, "outer"),
    "1+": (1, 0, None),
    "1-": (-1, 0, None),
    "2++": (1, 1, None),
    "2+-": (1, -1, None),
    "2-+": (-1, 1, None),
    "2--": (-1, -1, None),
}


@dataclass(frozen=True)
class OrbitClass:
    """Equilibrium ``(k, l)`` surrounded by the orbit, plus the class-0 branch."""

    k: int
    l: int
    branch: str | None = None

    def __post_init__(self):
        if self.k not in (-1, 0, 1) or self.l not in (-1, 0, 1):
            raise DomainError("k and l must be in {-1, 0, 1}")
        if self.k == 0 and self.l != 0:
            raise DomainError("orbits around (0, +-1) are not periodic families here")
        if self.k == 0 and self.branch not in ("inner", "outer"):
            raise DomainError("class 0 needs branch 'inner' or 'outer'")
        if self.k != 0 and self.branch is not None:
            raise DomainError("only class 0 has a branch")

    @property
    def number(self) -> int:
        return abs(self.k) + abs(self.l)

    @property
    def label(self) -> str:
        for lab, key in _LABELS.items():
            if key == (self.k, self.l, self.branch):
                return lab
        raise AssertionError("unreachable")

    @classmethod
    def from_label(cls, label):
        try:
            return cls(*_LABELS[label])
        except KeyError:
            raise DomainError(f"unknown class label {label!r}; "
                              f"choose from {sorted(_LABELS)}") from None

    def __str__(self):
        return self.label


ALL_CLASSES = tuple(OrbitClass.from_label(s) for s in _LABELS)


# ---------------------------------------------------------------------------
# extremal constants

def _root(x):
    """sqrt that returns None for negative arguments."""
    return math.sqrt(x) if x >= 0.0 else None


def _nested(outer_sign, inner):
    """``sqrt(1 +- sqrt(inner))`` or None where undefined."""
    if inner is None or inner < 0.0:
        return None
    v = 1.0 + outer_sign * math.sqrt(inner)
    return _root(v)


@dataclass(frozen=True)
class ExtremalConstants:
    """Turning points of level curves.

    The first block depends only on ``gamma``; the rest on the level ``a``
    as well.  A constant that has no real value for the given inputs is
    ``None``.
    """

    gamma: float
    a: float | None
    r_gamma: float
    l_gamma: float
    r_i: float
    r_e: float
    u_e: float
    r_M: float | None
    r0i0: float | None = None
    r0e0: float | None = None
    r0e1: float | None = None
    u0i0: float | None = None
    u0e0: float | None = None
    u0e1: float | None = None
    r10: float | None = None
    r11: float | None = None
    l10: float | None = None
    l11: float | None = None
    r21: float | None = None
    l21: float | None = None
    lo21: float | None = None

    def as_dict(self):
        return asdict(self)


def extremal_constants(cfg: SystemConfig, a: float | None = None) -> ExtremalConstants:
    """Closed-form extremal constants for ``cfg.gamma`` and optional level ``a``."""
    g = cfg.gamma
    if a is not None and not (0.0 < a < cfg.M):
        raise DomainError(f"level a = {a!r} must lie in (0, M = {cfg.M:.6g})")
    base = dict(
        gamma=g, a=a,
        r_gamma=math.sqrt(1.0 + math.sqrt(g)),
        l_gamma=math.sqrt(1.0 - math.sqrt(g)),
        r_i=math.sqrt(1.0 - math.sqrt(1.0 - g)),
        r_e=math.sqrt(1.0 + math.sqrt(1.0 - g)),
        u_e=math.sqrt(1.0 + g ** -0.5),
        r_M=_nested(1, cfg.M - g),
    )
    if a is None:
        return ExtremalConstants(**base)
    am = a - g
    if am > 1.0:
        am_inner = None  # sqrt(1 - sqrt(a - gamma)) would be imaginary
    else:
        am_inner = am
    au = (a - 1.0) / g
    lvl = dict(
        r0i0=_nested(-1, am_inner),
        r0e0=_nested(1, am),
        r0e1=_nested(1, a),
        u0i0=_nested(-1, au if au <= 1.0 else None),
        u0e0=_nested(1, au),
        u0e1=_nested(1, a / g),
        r11=_nested(1, a),
        l11=_nested(-1, a if a <= 1.0 else None),
        lo21=_nested(-1, a / g if a <= g else None),
    )
    lvl["l10"] = lvl["r0i0"]
    lvl["r10"] = lvl["r0e0"]
    lvl["r21"] = lvl["r11"]
    lvl["l21"] = lvl["l11"]
    return ExtremalConstants(**base, **lvl)


# ---------------------------------------------------------------------------
# intervals and levels

def orbit_interval(cls: OrbitClass, cfg: SystemConfig):
    """Open interval of ``|b|`` values whose orbit belongs to ``cls``.

    This is the topological range, bounded by separatrices (and by ``r_M``
    for the outer class-0 family).  It ignores the monotonicity restriction.
    """
    ec = extremal_constants(cfg)
    if cls.k == 0:
        return (0.0, ec.r_i) if cls.branch == "inner" else (ec.r_e, ec.r_M)
    if cls.l == 0:
        return (1.0, ec.r_e)
    return (1.0, ec.r_gamma)


def _pieces(gamma, table):
    """Evaluate a piecewise formula; at shared breakpoints return all values."""
    return [f(gamma) for lo, hi, f in table if lo <= gamma <= hi and gamma > 0.0]


_B_MINUS = (
    (0.0, 0.2, lambda g: 1.01),
    (0.2, 0.75, lambda g: 0.2 * g + 0.97),
    (0.75, GAMMA_STAR, lambda g: 0.6 * g + 0.67),
)
_B_PLUS = (
    (0.0, 0.5, lambda g: math.sqrt(1.0 + math.sqrt(1.0 - g))),
    (0.5, GAMMA_STAR, lambda g: math.sqrt(1.0 + math.sqrt(3.25 - g - 3.0 * g * g) / 2.0)),
)
_B_STAR_MINUS = (
    (0.0, 0.2, lambda g: 1.0),
    (0.2, 0.75, lambda g: 0.2 * g + 0.96),
    (0.75, GAMMA_STAR + GAMMA_STAR_SLACK, lambda g: 0.6 * g + 0.66),
)
_B_STAR_PLUS = (
    (0.0, 0.5, lambda g: math.sqrt(1.0 + math.sqrt(1.0 - g))),
    (0.5, GAMMA_STAR + GAMMA_STAR_SLACK,
     lambda g: math.sqrt(1.0 + math.sqrt(3.5 - g - g * g) / 2.0) + 0.02 * (g - 0.5)),
)


def lemma1_bounds(gamma):
    """Piecewise bounds of the class-1 sign regions.

    Returns ``(b_minus, b_plus, b_star_minus, b_star_plus)``.  Entries are
    ``None`` outside their printed gamma range.  Where two pieces meet the
    more restrictive value is used: the positivity interval
    ``(b_minus, b_plus)`` takes the narrower choice, and so do the
    sign-alternation intervals ``(1, b_star_minus)`` and ``(b_star_plus, r_e)``.
    """
    bm = _pieces(gamma, _B_MINUS)
    bp = _pieces(gamma, _B_PLUS)
    bsm = _pieces(gamma, _B_STAR_MINUS)
    bsp = _pieces(gamma, _B_STAR_PLUS)
    return (max(bm) if bm else None, min(bp) if bp else None,
            min(bsm) if bsm else None, max(bsp) if bsp else None)


def class_interval(cls: OrbitClass, cfg: SystemConfig):
    """Signed open interval of admissible starting values ``b``.

    Classes 0 and 2 use their full orbit interval.  Class 1 is restricted to
    the region where the sign of the angular coefficient is known to be
    constant, which exists only for ``gamma <= GAMMA_STAR``.
    """
    if cls.number == 1:
        lo, hi, _, _ = lemma1_bounds(cfg.gamma)
        if lo is None or hi is None:
            raise MonotonicityUnavailable(
                f"class 1 requires gamma <= {GAMMA_STAR}, got {cfg.gamma}")
    else:
        lo, hi = orbit_interval(cls, cfg)
    if cls.k < 0:
        return (-hi, -lo)
    return (lo, hi)


def _check_sign(cls, b):
    if cls.k != 0 and b * cls.k <= 0:
        raise DomainError(f"b = {b!r} has the wrong sign for class {cls}")
    if cls.k == 0 and b < 0:
        raise DomainError("class-0 orbits start at b > 0")


def energy_from_b(cls: OrbitClass, b: float, cfg: SystemConfig) -> float:
    """Energy level ``a = (1 - |l|) gamma + (b^2 - 1)^2`` of the orbit through ``(b, l)``.

    ``|b|`` may lie anywhere in the closed orbit interval; the endpoints give
    the separatrix levels.
    """
    _check_sign(cls, b)
    lo, hi = orbit_interval(cls, cfg)
    ab = abs(b)
    if not (lo - BOUNDARY_TOL <= ab <= hi + BOUNDARY_TOL):
        raise DomainError(f"|b| = {ab!r} outside the class-{cls} range [{lo}, {hi}]")
    return (1 - abs(cls.l)) * cfg.gamma + (b * b - 1.0) ** 2


def mu_constant(cls: OrbitClass, a: float, cfg: SystemConfig) -> float:
    """Constant in the identity ``q = alpha^-2 (...)`` for the angular equation.

    It equals ``1 + gamma - a`` for class 0 and ``a - (1 - |l|) gamma`` for
    classes 1 and 2.
    """
    if cls.k == 0:
        return 1.0 + cfg.gamma - a
    return a - (1 - abs(cls.l)) * cfg.gamma


@dataclass(frozen=True)
class OrbitSpec:
    """A periodic orbit of the unperturbed flow, identified by its start point."""

    cls: OrbitClass
    b: float
    gamma: float
    a: float
    mu: float

    @property
    def k(self):
        return self.cls.k

    @property
    def l(self):
        return self.cls.l

    @property
    def start(self):
        return (self.b, float(self.cls.l))


def make_orbit_spec(cls: OrbitClass, b: float, cfg: SystemConfig,
                    guard: float = 0.0) -> OrbitSpec:
    """Validate ``b`` for ``cls`` and build the orbit descriptor.

    ``|b|`` must lie strictly inside the orbit interval, at least ``guard``
    away from its endpoints.
    """
    b = float(b)
    if not math.isfinite(b):
        raise DomainError("b must be finite")
    _check_sign(cls, b)
    lo, hi = orbit_interval(cls, cfg)
    ab = abs(b)
    margin = max(guard, BOUNDARY_TOL)
    if not (lo + margin < ab < hi - margin):
        what = "too close to" if lo < ab < hi else "outside"
        raise DomainError(
            f"|b| = {ab!r} {what} the class-{cls} interval ({lo:.12g}, {hi:.12g})")
    a = energy_from_b(cls, b, cfg)
    return OrbitSpec(cls=cls, b=b, gamma=cfg.gamma, a=a, mu=mu_constant(cls, a, cfg))


def s_branch(c2, a, sign, cfg: SystemConfig):
    """``S_+-(C^2) = sqrt(1 +- gamma^{-1/2} sqrt(a - (C^2 - 1)^2))``.

    Works elementwise on arrays.  Radicands down to ``-1e-13`` are clamped to
    zero to absorb rounding at turning points.
    """
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    c2 = np.asarray(c2, dtype=float)
    inner = a - (c2 - 1.0) ** 2
    if np.any(inner < -1e-13):
        raise DomainError("inner radicand a - (C^2 - 1)^2 is negative")
    s = np.sqrt(np.maximum(inner, 0.0) / cfg.gamma)
    outer = 1.0 + sign * s
    if np.any(outer < -1e-13):
        raise DomainError("outer radicand 1 - sqrt(...) is negative")
    out = np.sqrt(np.maximum(outer, 0.0))
    return out if out.ndim else float(out)


def first_integral(x, y, gamma):
    """``(x^2 - 1)^2 + gamma (y^2 - 1)^2``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return (x * x - 1.0) ** 2 + gamma * (y * y - 1.0) ** 2


def unperturbed_field(x, y, gamma):
    """Right-hand side of the unperturbed flow."""
    return gamma * (y ** 3 - y), -(x ** 3 - x)


EQUILIBRIA = tuple((k, l) for k in (-1, 0, 1) for l in (-1, 0, 1))
