import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from torusgen.errors import ConfigError, PreconditionError
from torusgen.model import OrbitClass, SystemConfig
from torusgen.monotonicity import alpha_profile
from torusgen.orbit import orbit_for
from torusgen.perturbation import (Harmonic, Perturbation, eval_partials, eval_xy, example_s6,
                                   monomial, slice_functions)

harm = st.builds(Harmonic, st.integers(1, 3), st.floats(-2, 2), st.floats(-2, 2))
term = st.fixed_dictionaries({
    "m": st.integers(0, 3), "n": st.integers(0, 3), "mean": st.floats(-5, 5),
    "harmonics": st.lists(harm.map(lambda h: {"j": h.j, "cos": h.cos, "sin": h.sin}), max_size=2)})
pert_dict = st.fixed_dictionaries({k: st.lists(term, max_size=3) for k in ("X", "Y", "X_eps", "Y_eps")})


@given(pert_dict)
def test_json_roundtrip(d):
    p = Perturbation.from_dict(d)
    q = Perturbation.from_dict(json.loads(json.dumps(p.to_dict())))
    t, x, y = 0.3, 0.7, -1.1
    assert np.allclose(eval_xy(p, t, x, y, 0.1), eval_xy(q, t, x, y, 0.1), rtol=0, atol=1e-12)


def test_schema_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        Perturbation.from_dict({"Z": []})
    with pytest.raises(ConfigError):
        Perturbation.from_dict({"X": [{"m": 20, "n": 0, "mean": 1.0}]})


def test_example_values():
    X, Y = eval_xy(example_s6(), 0.0, 0.5, 2.0)
    assert X == 0.0
    assert Y == pytest.approx(4.57 * 2 - 1.66 * 8 - 0.855 * 1.0 + 0.513 * 4)


@given(pert_dict, st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(0, 1))
def test_partials_match_finite_differences(d, x, y, t):
    p = Perturbation.from_dict(d)
    Xx, Xy, Yx, Yy, _, _ = eval_partials(p, t, x, y)
    h = 1e-6
    fx = [(a - b) / (2 * h) for a, b in zip(eval_xy(p, t, x + h, y), eval_xy(p, t, x - h, y))]
    fy = [(a - b) / (2 * h) for a, b in zip(eval_xy(p, t, x, y + h), eval_xy(p, t, x, y - h))]
    assert np.allclose([Xx, Yx], fx, atol=1e-5) and np.allclose([Xy, Yy], fy, atol=1e-5)


def test_time_dependence_and_period():
    p = monomial("X", 0, 0, mean=1.0, harmonics=[Harmonic(1, 2.0, 0.0)], period_T=2.0)
    assert not p.time_independent
    assert eval_xy(p, 0.0, 0, 0)[0] == pytest.approx(3.0)
    assert eval_xy(p, 1.0, 0, 0)[0] == pytest.approx(-1.0)


def test_arithmetic():
    p = example_s6()
    q = p + p.scaled(-1.0)
    assert np.allclose(eval_xy(q, 0.0, 1.3, 0.4), 0.0)


def test_slices_shape_and_root_values(cfg05):
    o = orbit_for(OrbitClass.from_label("2++"), 1.2, cfg05)
    al = alpha_profile(o)
    sl = slice_functions(example_s6(), o, al, nt=8)
    assert sl.R.shape == (8, o.n)
    # time-independent perturbation: every t-row is the same
    assert np.ptp(sl.R, axis=0).max() == 0.0


def test_slices_reject_mixed_alpha():
    cfg = SystemConfig.default(0.9)
    o = orbit_for(OrbitClass.from_label("1+"), 1.1, cfg)
    with pytest.raises(PreconditionError):
        slice_functions(example_s6(), o, alpha_profile(o))
