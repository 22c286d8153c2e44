"""Closed orbits as sequences of arcs over which ``S`` is a function of ``C``.

Each arc runs from ``c0`` to ``c1`` in the direction of motion, with
``S = sigma * S_beta(C^2)`` where ``beta`` selects the branch of ``S_+-``.
The period is ``sum sigma int zeta_beta dC`` and contour moments are
``sum sigma^n int C^m S_beta^n dC``.

Near turning points the radicands ``D = a - (C^2 - 1)^2`` and
``gamma - D`` vanish linearly.  They are evaluated in factored form, with the
vanishing factor taken from the endpoint distance supplied by the quadrature,
so no accuracy is lost to cancellation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .quadrature import tanh_sinh


@dataclass(frozen=True)
class Arc:
    c0: float
    c1: float
    beta: int   # +1 for S_plus, -1 for S_minus
    sigma: int  # sign of S along the arc


@dataclass(frozen=True)
class Contour:
    gamma: float
    a: float
    arcs: tuple
    rho: float            # sqrt(1 + sqrt(a)), where D = 0 on the right
    lam2: float           # 1 - sqrt(a); may be negative
    rho0_2: float | None  # roots of gamma - D in C^2, when a >= gamma
    lam0_2: float | None


def _negate(arcs):
    return tuple(Arc(-x.c0, -x.c1, x.beta, -x.sigma) for x in arcs)


def _s_mirror(arcs):
    return tuple(Arc(x.c1, x.c0, x.beta, -x.sigma) for x in reversed(arcs))


def build_contour(k, l, branch, b, a, gamma):
    """Arcs of the orbit through ``(b, l)`` at level ``a``."""
    ab = abs(b)
    sa = math.sqrt(a)
    rho = math.sqrt(1.0 + sa)
    lam2 = 1.0 - sa
    lam = math.sqrt(lam2) if lam2 >= 0.0 else None
    if a >= gamma:
        r = math.sqrt(a - gamma)
        rho0_2, lam0_2 = 1.0 + r, 1.0 - r
    else:
        rho0_2 = lam0_2 = None
    M, P = -1, 1
    if k == 0 and branch == "inner":
        arcs = (Arc(ab, -ab, M, 1), Arc(-ab, ab, M, -1))
        lam0_2 = ab * ab
    elif k == 0:
        arcs = (Arc(ab, rho, M, -1), Arc(rho, -rho, P, -1), Arc(-rho, -ab, M, -1),
                Arc(-ab, -rho, M, 1), Arc(-rho, rho, P, 1), Arc(rho, ab, M, 1))
        rho0_2 = ab * ab
    elif l == 0:
        lam0 = math.sqrt(2.0 - ab * ab)
        if lam is None:
            raise DomainError("class-1 orbit needs a <= 1")
        arcs = (Arc(ab, rho, M, -1), Arc(rho, lam, P, -1), Arc(lam, lam0, M, -1),
                Arc(lam0, lam, M, 1), Arc(lam, rho, P, 1), Arc(rho, ab, M, 1))
        rho0_2, lam0_2 = ab * ab, lam0 * lam0
        if k < 0:
            arcs = _negate(arcs)
    else:
        # the start point is the right turning point: b^2 = 1 + sqrt(a)
        rho = ab
        lam = math.sqrt(2.0 - ab * ab)
        lam2 = lam * lam
        arcs = (Arc(rho, lam, M, 1), Arc(lam, rho, P, 1))
        if (k, l) == (1, -1):
            arcs = _s_mirror(arcs)
        elif (k, l) == (-1, -1):
            arcs = _negate(arcs)
        elif (k, l) == (-1, 1):
            arcs = _negate(_s_mirror(arcs))
    return Contour(gamma, a, arcs, rho, lam2, rho0_2, lam0_2)


def _sq_minus(x, r2, arc, sgn, da, db):
    """``x^2 - r2`` using the endpoint distance when ``|endpoint|^2 == r2``."""
    direct = x * x - r2
    if r2 is None or r2 < 0.0:
        return direct
    r = math.sqrt(r2)
    hit0 = abs(arc.c0) == r or abs(arc.c0) * abs(arc.c0) == r2
    hit1 = abs(arc.c1) == r or abs(arc.c1) * abs(arc.c1) == r2
    out = direct
    if hit0:
        # x - c0 = sgn * da
        out = np.where(da <= db if hit1 else True, sgn * da * (x + arc.c0), out)
    if hit1:
        alt = -sgn * db * (x + arc.c1)
        out = np.where(db < da if hit0 else True, alt, out)
    return out


def branch_values(ct: Contour, arc: Arc, x, da, db):
    """``(sqrt(D), S_beta)`` at nodes ``x`` of ``arc``."""
    sgn = 1.0 if arc.c1 > arc.c0 else -1.0
    f1 = -_sq_minus(x, ct.rho * ct.rho, arc, sgn, da, db)   # rho^2 - x^2
    f2 = _sq_minus(x, ct.lam2, arc, sgn, da, db)           # x^2 - lam^2
    D = np.maximum(f1 * f2, 0.0)
    g = ct.gamma
    s = np.sqrt(D / g)
    if arc.beta > 0:
        Sb = np.sqrt(1.0 + s)
    else:
        if ct.rho0_2 is not None:
            G = _sq_minus(x, ct.rho0_2, arc, sgn, da, db) * \
                _sq_minus(x, ct.lam0_2, arc, sgn, da, db)
        else:
            G = g - D
        Sb = np.sqrt(np.maximum(G, 0.0) / (g * (1.0 + s)))
    return np.sqrt(D), Sb


def arc_time(ct: Contour, arc: Arc, rtol=1e-14):
    """Time spent on ``arc``; positive by construction."""
    sg = math.sqrt(ct.gamma)

    def f(x, da, db):
        sd, Sb = branch_values(ct, arc, x, da, db)
        with np.errstate(divide="ignore"):
            return arc.sigma * arc.beta / (sg * sd * Sb)

    return tanh_sinh(f, arc.c0, arc.c1, rtol=rtol).value


def contour_period(ct: Contour, rtol=1e-14):
    return math.fsum(arc_time(ct, arc, rtol) for arc in ct.arcs)


def contour_moment(ct: Contour, m, n, rtol=1e-14):
    """``I^{mn}``: the line integral of ``C^m S^n dC`` around the orbit."""
    total = []
    for arc in ct.arcs:
        def f(x, da, db, arc=arc):
            _, Sb = branch_values(ct, arc, x, da, db)
            return (arc.sigma ** n) * x ** m * Sb ** n
        total.append(tanh_sinh(f, arc.c0, arc.c1, rtol=rtol, atol=1e-300).value)
    return math.fsum(total)
