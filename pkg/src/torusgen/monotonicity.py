"""Angular monotonicity indicator ``alpha_kl`` and the class-1 sign regions.

``alpha = C'(S - l) - (C - k) S'`` is the Jacobian of the special polar
change ``x = C + (C - k) r, y = S + (S - l) r`` at ``r = 0``; the change is
valid along an orbit only if ``alpha`` keeps one sign.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError, DomainError
from .model import (GAMMA_STAR, GAMMA_STAR_SLACK, OrbitClass, SystemConfig,
                    extremal_constants, lemma1_bounds)
from .orbit import ParametrizedOrbit, orbit_for

SIGN_TOL = 1e-9
ALG_TOL = 1e-9


def alpha_values(C, S, dC, dS, k, l):
    """Cross-product form of the indicator."""
    return dC * (S - l) - (C - k) * dS


def alpha_algebraic(C, S, a, gamma, k, l):
    """Algebraic form valid on the level ``a``."""
    return (a - 1.0 - gamma + C * C + gamma * S * S
            - k * (C ** 3 - C) - gamma * l * (S ** 3 - S))


def alpha_derivative(C, S, gamma, k, l):
    """``alpha' = C'' (S - l) - (C - k) S''`` along the unperturbed flow."""
    C3 = C ** 3 - C
    S3 = S ** 3 - S
    Cpp = -gamma * (3.0 * S * S - 1.0) * C3
    Spp = -gamma * (3.0 * C * C - 1.0) * S3
    return Cpp * (S - l) - (C - k) * Spp


@dataclass(frozen=True, eq=False)
class AlphaProfile:
    orbit: ParametrizedOrbit
    values: np.ndarray
    dvalues: np.ndarray
    sign: str
    min_abs: float
    alg_error: float

    @property
    def fixed_sign(self):
        return self.sign != "mixed"


def classify(values, sign_tol=SIGN_TOL):
    if np.all(values > sign_tol):
        return "positive"
    if np.all(values < -sign_tol):
        return "negative"
    return "mixed"


def alpha_profile(orbit: ParametrizedOrbit, sign_tol=SIGN_TOL, alg_tol=ALG_TOL) -> AlphaProfile:
    """Evaluate ``alpha`` on the orbit grid and classify its sign."""
    s = orbit.spec
    k, l = s.cls.k, s.cls.l
    vals = alpha_values(orbit.C, orbit.S, orbit.dC, orbit.dS, k, l)
    alg = alpha_algebraic(orbit.C, orbit.S, s.a, s.gamma, k, l)
    err = float(np.max(np.abs(vals - alg)))
    if err > alg_tol:
        raise AccuracyError(f"alpha forms disagree by {err:.3g}")
    return AlphaProfile(orbit=orbit, values=vals,
                        dvalues=alpha_derivative(orbit.C, orbit.S, s.gamma, k, l),
                        sign=classify(vals, sign_tol), min_abs=float(np.min(np.abs(vals))),
                        alg_error=err)


# ---------------------------------------------------------------------------
# Class-1 sign bounds

@dataclass(frozen=True)
class Lemma1Region:
    gamma: float
    b_minus: float | None
    b_plus: float | None
    b_star_minus: float
    b_star_plus: float
    r_e: float

    def expected(self, b):
        """Claimed sign for class-1 ``|b|``: 'positive', 'mixed' or None (no claim)."""
        g = self.gamma
        if g > GAMMA_STAR + GAMMA_STAR_SLACK:
            return "mixed" if 1.0 < b < self.r_e else None
        if self.b_minus is not None and g < GAMMA_STAR and self.b_minus < b < self.b_plus:
            return "positive"
        if 1.0 < b < self.b_star_minus or self.b_star_plus < b < self.r_e:
            return "mixed"
        return None


def lemma1_region(gamma: float) -> Lemma1Region:
    """Printed piecewise bounds of the class-1 sign regions at ``gamma``."""
    if not (0.0 < gamma <= GAMMA_STAR + GAMMA_STAR_SLACK):
        raise DomainError(
            f"gamma = {gamma} outside (0, {GAMMA_STAR + GAMMA_STAR_SLACK}]; "
            "above the threshold the class-1 indicator alternates sign")
    bm, bp, bsm, bsp = lemma1_bounds(gamma)
    return Lemma1Region(gamma, bm, bp, bsm, bsp, math.sqrt(1.0 + math.sqrt(1.0 - gamma)))


def _region_any(gamma):
    """Region object for any gamma in (0, 1] (no bounds above the threshold)."""
    if gamma <= GAMMA_STAR + GAMMA_STAR_SLACK:
        return lemma1_region(gamma)
    return Lemma1Region(gamma, None, None, math.nan, math.nan,
                        math.sqrt(1.0 + math.sqrt(1.0 - gamma)))


@dataclass(frozen=True)
class Lemma1Row:
    gamma: float
    b: float
    part: int
    expected: str
    observed: str
    min_abs: float

    @property
    def ok(self):
        return self.expected == self.observed


@dataclass
class Lemma1Report:
    rows: list

    @property
    def matches(self):
        return all(r.ok for r in self.rows)

    @property
    def mismatches(self):
        return [r for r in self.rows if not r.ok]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["gamma", "b", "part", "expected", "sign", "min_abs"])
            for r in self.rows:
                w.writerow([f"{r.gamma:.17g}", f"{r.b:.17g}", r.part, r.expected,
                            r.observed, f"{r.min_abs:.17g}"])


def _claim_part(region, b):
    exp = region.expected(b)
    if exp is None:
        return None, None
    if exp == "positive":
        return 1, exp
    return (2 if region.gamma > GAMMA_STAR + GAMMA_STAR_SLACK else 3), exp


def _observe(gamma, b):
    cfg = SystemConfig.default(gamma)
    prof = alpha_profile(orbit_for(OrbitClass(1, 0), b, cfg))
    return prof.sign, prof.min_abs


def lemma1_verify(gamma=None, n_b=10, n_gamma_steps=10, b_values=None, jobs=1):
    """Check the class-1 sign claims on a grid.

    With ``gamma`` given only that value is scanned; otherwise ``n_gamma_steps``
    equally spaced values in ``(0, 1)`` are used.  For each gamma, ``n_b``
    interior points of every claimed sub-interval are tested (or the explicit
    ``b_values``).  Mismatches are reported in the rows, not raised.
    """
    if n_b < 1 or (gamma is None and n_gamma_steps < 1):
        raise DomainError("grid resolutions must be positive")
    gammas = [gamma] if gamma is not None else list(
        np.arange(1, n_gamma_steps + 1) / (n_gamma_steps + 1))
    tasks = []
    for g in gammas:
        reg = _region_any(g)
        if b_values is not None:
            bs = list(b_values)
        else:
            bs = []
            ivs = []
            if g > GAMMA_STAR + GAMMA_STAR_SLACK:
                ivs.append((1.0, reg.r_e))
            else:
                if reg.b_minus is not None and g < GAMMA_STAR:
                    ivs.append((reg.b_minus, reg.b_plus))
                ivs.append((1.0, reg.b_star_minus))
                ivs.append((reg.b_star_plus, reg.r_e))
            for lo, hi in ivs:
                if hi - lo > 4e-4:
                    bs.extend(lo + (hi - lo) * (np.arange(1, n_b + 1) / (n_b + 1)))
        for b in bs:
            part, exp = _claim_part(reg, float(b))
            if part is not None:
                tasks.append((g, float(b), part, exp))
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as ex:
        obs = list(ex.map(lambda t: _observe(t[0], t[1]), tasks))
    rows = [Lemma1Row(g, b, part, exp, o[0], o[1]) for (g, b, part, exp), o in zip(tasks, obs)]
    return Lemma1Report(rows)
