import json
import warnings

import numpy as np
import pytest

from torusgen.errors import DomainError
from torusgen.surface import (RangeWarning, build_surface, enclosed_equilibria, surface_mesh,
                              torus_point, torus_point_grid, upsilon_first_order, upsilon_grid,
                              winding_number)


def test_eps_zero_is_the_orbit(surfaces):
    se = surfaces[("2++", 0)]
    o = se.orbit
    x, y = torus_point_grid(se, [0.0, 0.5], o.phi, 0.0)
    assert np.max(np.abs(x - o.C)) < 1e-12 and np.max(np.abs(y - o.S)) < 1e-12


def test_first_order_formula(surfaces):
    se = surfaces[("0e", 0)]
    a, g = se.alpha.values, se.avg.g0.values[0]
    if g.size == a.size:
        u = upsilon_grid(se, [0.0], se.orbit.phi, 1e-3)[0]
        assert np.allclose(u, g * 1e-3 / a, rtol=1e-10, atol=1e-14)
    assert upsilon_first_order(se, 0.0, 0.0, 2e-3) == pytest.approx(
        2 * upsilon_first_order(se, 0.0, 0.0, 1e-3), rel=1e-12)


def test_t_independent_first_order(surfaces):
    se = surfaces[("1+", 0)]
    phi = se.orbit.omega * np.arange(16) / 16
    u = upsilon_grid(se, [0.0, 0.3, 0.7], phi, 1e-2)
    assert np.ptp(u, axis=0).max() < 1e-12


def test_start_point_near_b_star(surfaces):
    for se in surfaces.values():
        x, y = torus_point(se, 0.0, 0.0, 1e-3)
        assert abs(x - se.orbit.spec.b) < 0.05 and abs(y - se.l) < 1e-12


def test_class2_factor_structure(surfaces):
    se = surfaces[("2++", 0)]
    _, y = torus_point_grid(se, [0.0], se.orbit.phi, 1e-2)
    assert np.all(np.sign(y[0] - 1) * np.sign(se.orbit.S - 1) >= 0)


def test_mesh_and_exports(surfaces, tmp_path):
    se = surfaces[("2++", 0)]
    m0 = surface_mesh(se, nt=8, nphi=16, eps=0.0)
    assert np.ptp(m0.x, axis=0).max() == 0.0
    m = surface_mesh(se, nt=8, nphi=16, eps=1e-2)
    m.write_csv(tmp_path / "s.csv")
    m.write_header(tmp_path / "s.json")
    assert len((tmp_path / "s.csv").read_text().splitlines()) == 8 * 16 + 1
    hdr = json.loads((tmp_path / "s.json").read_text())
    assert set(hdr) >= {"class", "b_star", "omega_star", "eps", "nu"}
    with pytest.raises(DomainError):
        surface_mesh(se, nt=4, nphi=16, eps=1e-2)
    with pytest.raises(DomainError):
        surface_mesh(se, nt=8, nphi=16, eps=0.5)


def test_range_warning(surfaces):
    se = surfaces[("1+", 0)]
    with pytest.warns(RangeWarning):
        torus_point_grid(se, [0.0], se.orbit.phi, 0.1)


def test_winding_numbers():
    th = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    x, y = 1 + 0.5 * np.cos(th), 1 + 0.5 * np.sin(th)
    assert winding_number(x, y, 1, 1) == 1
    assert winding_number(x[::-1], y[::-1], 1, 1) == -1
    assert winding_number(x, y, 0, 0) == 0
    assert enclosed_equilibria(x, y) == [(1, 1)]


@pytest.mark.parametrize("key, count", [(("0e", 0), 9), (("2++", 0), 1), (("2--", 0), 1),
                                        (("1+", 0), 3), (("1+", 1), 3)])
def test_enclosure_small_eps(surfaces, key, count):
    se = surfaces[key]
    x, y = torus_point_grid(se, [0.0], se.orbit.phi, 1e-3)
    assert len(enclosed_equilibria(x[0], y[0])) == count


def test_second_order_hook(cfg05, example_roots):
    avg = example_roots[("0e", 0)].avg
    se1 = build_surface(avg, cfg05)
    se2 = build_surface(avg, cfg05, second_order=True)
    phi = se1.orbit.phi[:8]
    d = upsilon_grid(se2, [0.0], phi, 1e-3) - upsilon_grid(se1, [0.0], phi, 1e-3)
    assert np.max(np.abs(d)) < 1e-4


def test_nu_mismatch(cfg05, example_roots_nu1):
    with pytest.raises(DomainError):
        build_surface(example_roots_nu1[("2++", 0)].avg, cfg05)
