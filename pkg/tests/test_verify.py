import math

import numpy as np
import pytest

from torusgen.errors import DomainError, EscapeError
from torusgen.model import OrbitClass, SystemConfig
from torusgen.orbit import orbit_for
from torusgen.perturbation import Perturbation, monomial
from torusgen.verify import (energy_drift, fit_slope, horizon_periods, integrate_perturbed,
                             surface_distance, surface_residual)


def test_conservation_without_perturbation(cfg05):
    tr = integrate_perturbed(cfg05, Perturbation(), 1.2, 1.0, 0.0, 100)
    assert energy_drift(tr, 0.5) < 1e-10
    assert tr.strobe.size == 101


def test_return_period_matches_orbit(cfg05):
    o = orbit_for(OrbitClass.from_label("2++"), 1.2, cfg05)
    cfg = SystemConfig(0.5, period_T=o.omega, Mx=2.0, My=2.0)
    tr = integrate_perturbed(cfg, Perturbation(), 1.2, 1.0, 0.0, 3)
    assert np.max(np.hypot(tr.x - 1.2, tr.y - 1.0)) < 1e-8


def test_escape():
    cfg = SystemConfig(0.5, Mx=2.0, My=2.0)
    p = monomial("X", 1, 0, mean=50.0)
    with pytest.raises(EscapeError) as exc:
        integrate_perturbed(cfg, p, 1.5, 0.0, 0.1, 50)
    assert exc.value.t_exit > 0


def test_domain_checks(cfg05):
    with pytest.raises(DomainError):
        integrate_perturbed(cfg05, Perturbation(), 2.5, 0.0, 0.0, 1)
    with pytest.raises(DomainError):
        integrate_perturbed(cfg05, Perturbation(), 1.2, 1.0, 0.5, 1)


def test_nu1_horizon():
    cfg = SystemConfig(0.5, nu=1)
    assert horizon_periods(cfg, 2, 0.01, omega=5.0) == 1000
    assert horizon_periods(SystemConfig(0.5), 7, 0.01) == 7


def test_fit_slope_exact():
    e = np.array([1e-2, 5e-3, 2.5e-3])
    fit = fit_slope(e, 3.0 * e ** 2)
    assert fit.slope == pytest.approx(2.0, abs=1e-12)
    assert fit.ci[0] <= 2.0 <= fit.ci[1]


def test_distance_zero_on_surface(surfaces):
    se = surfaces[("0e", 0)]
    from torusgen.surface import torus_point
    x, y = torus_point(se, 0.0, 1.234, 1e-2)
    assert surface_distance(se, 0.0, x, y, 1e-2) < 1e-10


def test_residual_slope_class2(cfg05, p_s6, surfaces):
    rep = surface_residual(cfg05, p_s6, surfaces[("2++", 0)])
    assert 1.7 <= rep.slope <= 2.3
    assert rep.time_reversed               # L > 0: measured in reversed time
    assert rep.attraction == "repelling"
    assert all(r > 0 for r in rep.max_residuals)
    assert "slope" in rep.table()


def test_outer_surface_attracts(cfg05, p_s6, surfaces):
    rep = surface_residual(cfg05, p_s6, surfaces[("0e", 0)], eps_list=(1e-2, 5e-3))
    assert rep.attraction == "attracting" and not rep.time_reversed
    assert rep.probe.ratios[0] == pytest.approx(rep.probe.predicted, rel=0.2)
