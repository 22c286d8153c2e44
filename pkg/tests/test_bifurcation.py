import numpy as np
import pytest
from hypothesis import given, strategies as st

from torusgen.bifurcation import (generating_value_direct, generating_value_series,
                                  moment_survives, refine_root, scan_roots, siegel_check)
from torusgen.errors import DomainError
from torusgen.model import ALL_CLASSES, OrbitClass, SystemConfig, make_orbit_spec
from torusgen.orbit import SEPARATRIX_GUARD, orbit_for
from torusgen.perturbation import Perturbation, monomial

CFG = SystemConfig.default(0.5)


def _b(cls, cfg):
    from torusgen.model import orbit_interval
    lo, hi = orbit_interval(cls, cfg)
    b = lo + 0.4 * (hi - lo)
    return -b if cls.k < 0 else b


def test_linear_damping_area_oracle():
    # Y = c y gives omega * R_bar = c * (signed area enclosed by the orbit)
    c = 0.7
    p = monomial("Y", 0, 1, mean=c)
    for label in ("0e", "2++", "1-"):
        cls = OrbitClass.from_label(label)
        o = orbit_for(cls, _b(cls, CFG), CFG)
        # integral of C dS; the generating value uses S dC (parts)
        area = np.mean(o.C * o.dS) * o.omega
        val = generating_value_direct(p, o.spec, CFG, orbit=o)
        assert abs(val * o.omega) == pytest.approx(c * abs(area), rel=1e-8)


terms = st.lists(st.tuples(st.sampled_from(["X", "Y"]), st.integers(0, 4), st.integers(0, 4),
                           st.floats(-3, 3)), min_size=1, max_size=5)


@given(terms, st.sampled_from([0.3, 0.7]), st.sampled_from(ALL_CLASSES))
def test_series_matches_direct(ts, g, cls):
    p = Perturbation.from_dict({k: [{"m": m, "n": n, "mean": c} for (t, m, n, c) in ts if t == k]
                                for k in ("X", "Y")})
    cfg = SystemConfig.default(g)
    spec = make_orbit_spec(cls, _b(cls, cfg), cfg, SEPARATRIX_GUARD)
    d = generating_value_direct(p, spec, cfg)
    s = generating_value_series(p, spec, cfg)
    scale = sum(abs(c) for *_, c in ts)
    assert abs(d - s) <= 1e-6 * max(abs(d), 1e-3 * scale)


def test_moment_parity():
    c0, c1 = OrbitClass.from_label("0e"), OrbitClass.from_label("1+")
    assert moment_survives(c0, 0, 1) and not moment_survives(c0, 1, 1)
    assert not moment_survives(c0, 0, 2)
    assert moment_survives(c1, 1, 1) and not moment_survives(c1, 0, 2)
    assert moment_survives(OrbitClass.from_label("2++"), 1, 2)


def test_zero_perturbation_scan():
    sc = scan_roots(Perturbation(), OrbitClass.from_label("2++"), CFG, step=0.05)
    assert np.all(sc.values == 0.0) and sc.brackets == []


def test_scan_rejects_bad_step():
    with pytest.raises(DomainError):
        scan_roots(Perturbation(), OrbitClass.from_label("2++"), CFG, step=0.0)


def test_scan_and_refine_outer(cfg05, p_s6):
    cls = OrbitClass.from_label("0e")
    sc = scan_roots(p_s6, cls, cfg05, step=1e-2)
    assert sc.brackets == [(1.5, 1.51)] and sc.refined == [(1.5, 1.501)]
    b = refine_root(p_s6, cls, sc.refined[0], cfg05)
    assert b == pytest.approx(1.50032857, abs=1e-8)


def test_refine_accepts_magnitudes(cfg05, p_s6):
    cls = OrbitClass.from_label("2--")
    assert refine_root(p_s6, cls, (1.26, 1.261), cfg05) == pytest.approx(-1.26035963, abs=1e-8)


def test_siegel():
    assert not siegel_check(1.0, 2.0).passed           # exact resonance
    rep = siegel_check(1.0, (1 + 5 ** 0.5) / 2)        # golden mean is badly approximable
    assert rep.passed and rep.min_margin > 0.1


def test_admissible_flags(example_roots):
    for key, r in example_roots.items():
        assert r.admissible, (key, r.flags, r.notes)
        assert r.to_dict()["admissible"]


def test_frozen_roots(example_roots):
    want = {("0e", 0): (1.50032857, -4.8888), ("1+", 0): (1.20173220, 0.035785),
            ("1+", 1): (1.21507042, -0.034191), ("2++", 0): (1.20011766, 0.24597),
            ("2--", 0): (-1.26035963, 0.65958)}
    for key, (b, L) in want.items():
        assert example_roots[key].b_star == pytest.approx(b, abs=2e-8)
        assert example_roots[key].L == pytest.approx(L, rel=1e-4)
