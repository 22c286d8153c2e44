"""Shared fixtures: the gamma = 0.5 example and its refined roots."""
import sys

import pytest
from hypothesis import settings

from torusgen.bifurcation import assess_admissibility
from torusgen.model import OrbitClass, SystemConfig
from torusgen.perturbation import example_s6
from torusgen.surface import build_surface

settings.register_profile("default", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("default")

# refined sign-change brackets of T*omega*R_bar at step 1e-3 (|b|)
EXAMPLE_BRACKETS = {
    ("0e", 0): (1.5, 1.501),
    ("1+", 0): (1.201, 1.202),
    ("1+", 1): (1.215, 1.216),
    ("2++", 0): (1.2, 1.201),
    ("2--", 0): (1.26, 1.261),
}


@pytest.fixture(scope="session")
def cfg05():
    return SystemConfig(0.5, nu=0, period_T=1.0, Mx=2.0, My=2.0)


@pytest.fixture(scope="session")
def cfg05_nu1():
    return SystemConfig(0.5, nu=1, period_T=1.0, Mx=2.0, My=2.0)


@pytest.fixture(scope="session")
def p_s6():
    return example_s6()


def _signed(label, br):
    s = -1.0 if OrbitClass.from_label(label).k < 0 else 1.0
    return (s * br[0], s * br[1])


@pytest.fixture(scope="session")
def example_roots(cfg05, p_s6):
    """``{(label, i): AdmissibleResult}`` at nu = 0."""
    return {key: assess_admissibility(p_s6, OrbitClass.from_label(key[0]), cfg05,
                                      bracket=_signed(key[0], br))
            for key, br in EXAMPLE_BRACKETS.items()}


@pytest.fixture(scope="session")
def example_roots_nu1(cfg05_nu1, p_s6, example_roots):
    return {key: assess_admissibility(p_s6, OrbitClass.from_label(key[0]), cfg05_nu1,
                                      b_star=r.b_star)
            for key, r in example_roots.items()}


@pytest.fixture(scope="session")
def surfaces(cfg05, example_roots):
    return {key: build_surface(r.avg, cfg05) for key, r in example_roots.items()}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
