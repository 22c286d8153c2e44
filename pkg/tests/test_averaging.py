import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from torusgen.averaging import (BiPeriodicFunction, beta, beta_closed_form_class0,
                                integrate_periodic, phi_antiderivative, solve_small_divisor,
                                t_antiderivative)
from torusgen.errors import PreconditionError, SmallDivisorError
from torusgen.model import OrbitClass, SystemConfig, orbit_interval
from torusgen.monotonicity import alpha_profile
from torusgen.orbit import orbit_for
from torusgen.perturbation import eval_partials


def _random_rhs(seed, nt, nphi, modes):
    rng = np.random.default_rng(seed)
    c = np.zeros((nt, nphi), complex)
    for p in range(-modes // 2 + 1, modes // 2):
        for q in range(-modes // 2 + 1, modes // 2):
            if (p, q) != (0, 0):
                c[p % nt, q % nphi] = rng.normal() + 1j * rng.normal()
    return np.real(np.fft.ifft2(c)) * nt * nphi


@given(st.integers(0, 10**6), st.integers(2, 8), st.floats(0.5, 3.0), st.floats(2.0, 13.0))
def test_solver_residual(seed, modes, T, w):
    v = _random_rhs(seed, 16, 16, modes)
    v -= v.mean()
    rhs = BiPeriodicFunction(v, T, w)
    try:
        g = solve_small_divisor(rhs)
    except SmallDivisorError:
        return
    resid = g.dt().values + g.dphi().values - v
    assert np.max(np.abs(resid)) < 1e-10 * max(1.0, np.max(np.abs(v)))


@pytest.mark.parametrize("p, q", [(1, 0), (0, 1), (2, -1), (-3, 2)])
def test_single_mode_analytic(p, q):
    T, w, nt, nphi = 1.0, 5.0482162039312755, 16, 32
    t = T * np.arange(nt)[:, None] / nt
    phi = w * np.arange(nphi)[None, :] / nphi
    kappa = 2 * math.pi * p / T + 2 * math.pi * q / w
    arg = 2 * math.pi * p * t / T + 2 * math.pi * q * phi / w
    g = solve_small_divisor(BiPeriodicFunction(np.cos(arg), T, w))
    assert np.max(np.abs(g.values - np.sin(arg) / kappa)) < 1e-12


def test_solver_rejects_mean_and_resonance():
    with pytest.raises(PreconditionError):
        solve_small_divisor(BiPeriodicFunction(np.ones((4, 4)), 1.0, 2.0))
    t = np.arange(8)[:, None] / 8
    phi = 2.0 * np.arange(8)[None, :] / 8
    with pytest.raises(SmallDivisorError):
        # mode (p, q) = (1, -2) has p / T + q / omega = 0 when omega = 2 T
        solve_small_divisor(BiPeriodicFunction(np.cos(2 * math.pi * (t - phi)), 1.0, 2.0))


def test_antiderivatives():
    n, w, T = 64, 3.0, 2.0
    phi = w * np.arange(n) / n
    assert np.allclose(phi_antiderivative(np.cos(2 * math.pi * phi / w), w),
                       np.sin(2 * math.pi * phi / w) * w / (2 * math.pi), atol=1e-13)
    t = T * np.arange(n)[:, None] / n
    assert np.allclose(t_antiderivative(np.sin(2 * math.pi * t / T) + 0 * phi, T),
                       -np.cos(2 * math.pi * t / T) * T / (2 * math.pi) + 0 * phi, atol=1e-13)
    vals, end = integrate_periodic(np.full(n, 2.0), w)
    assert end == pytest.approx(6.0) and vals[-1] == pytest.approx(2.0 * phi[-1])


@pytest.mark.parametrize("label", ["0i", "0e", "1+", "2++", "2-+", "2--"])
@pytest.mark.parametrize("g", [0.3, 0.5])
def test_beta_periodic(label, g):
    cls = OrbitClass.from_label(label)
    cfg = SystemConfig.default(g)
    lo, hi = orbit_interval(cls, cfg)
    b = 0.5 * (lo + hi) if cls.number != 1 else 1.15
    o = orbit_for(cls, -b if cls.k < 0 else b, cfg)
    al = alpha_profile(o)
    bp = beta(o, al)
    assert abs(bp.end_value) < 1e-8
    if cls.k == 0:
        cf = beta_closed_form_class0(al.values, o.spec.mu)
        assert np.max(np.abs(cf - bp.values)) < 1e-8


def test_L_equals_mean_divergence_at_roots(example_roots, p_s6):
    # independent oracle: at a root, L is the orbit average of div(X, Y)
    for key, r in example_roots.items():
        o = r.avg.orbit
        Xx, _, _, Yy, _, _ = eval_partials(p_s6, 0.0, o.C, o.S)
        assert r.L == pytest.approx(float(np.mean(Xx + Yy)), rel=1e-8, abs=1e-10), key


def test_L0_equals_L1(example_roots, example_roots_nu1):
    for key in example_roots:
        assert example_roots[key].L0 == pytest.approx(example_roots_nu1[key].L1, rel=1e-10)


def test_root_diagnostics(example_roots):
    for r in example_roots.values():
        d = r.avg.diagnostics()
        assert abs(d["beta_end"]) < 1e-8
        assert abs(d["f_solvability"]) < 1e-10
        assert math.isfinite(d["g_bar"])


def test_t_independent_perturbation_gives_t_independent_g0(example_roots):
    g0 = example_roots[("2++", 0)].avg.g0.values
    assert np.ptp(g0, axis=0).max() < 1e-12
