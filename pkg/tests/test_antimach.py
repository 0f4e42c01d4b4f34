import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riemext import antimach as am
from riemext.dual import Dual, split_second
from riemext.errors import IllConditioned
from riemext.geodesic import InitialData, integrate
from riemext.geometry import christoffel

unit = st.floats(-1, 1, allow_nan=False)


def random_init(rng, xi3):
    xi = rng.uniform(-1, 1, 4)
    xi[2] = xi3
    return InitialData(rng.uniform(-1, 1, 4), rng.uniform(-1, 1, 4), xi, rng.uniform(-1, 1, 4))


def test_metric_components_and_det(am4):
    g = am4((0.0, 0.0, 0.0, 1.5))
    assert g[0, 0] == 1 and g[0, 2] == -3 and g[1, 2] == 1 and g[2, 2] == 4.5 and g[3, 3] == 1
    for t in (-2.0, 0.0, 0.7, 3.1):
        assert np.linalg.det(am4((0, 0, 0, t))) == pytest.approx(-1.0, abs=1e-12)


def test_hand_connection_equals_levi_civita(am4, am_conn):
    rng = np.random.default_rng(0)
    for p in rng.uniform(-2, 2, (100, 4)):
        assert np.max(np.abs(christoffel(am4, p) - am_conn(p))) <= 1e-14


@settings(max_examples=50, deadline=None)
@given(st.lists(unit, min_size=8, max_size=8), st.floats(0.2, 2), st.floats(0, 3))
def test_basic_form_solves_base_equations(v, xi3, s):
    init = InitialData(v[:4], (0,) * 4, (v[4], v[5], xi3, v[7]), (0,) * 4)
    jets = [split_second(c) for c in am.basic_closed_form(init, Dual(Dual(s, 1.0), Dual(1.0, 0.0)))]
    pos = [j[0] for j in jets]
    vel = [j[1] for j in jets]
    acc = [j[3] for j in jets]
    assert np.max(np.abs(np.subtract(acc, am.basic_rhs(pos, vel)))) <= 1e-9


def test_basic_form_initial_condition():
    init = InitialData((0.1, 0.2, 0.3, 0.4), (0,) * 4, (0.5, -0.3, 1.2, 0.9), (0,) * 4)
    assert am.basic_closed_form(init, 0.0) == pytest.approx((0.1, 0.2, 0.3, 0.4), abs=1e-15)


def test_basic_form_examples():
    assert am.basic_closed_form(InitialData.at_vertex((1, 2, 0, 3), (5, 5, 5, 5)), 1.0) == (1, 5, 0, 3)
    x, y, z, t = am.basic_closed_form(InitialData.at_vertex((1, 0, 1, 0), (0,) * 4), 1.0)
    assert x == pytest.approx(-1 + math.sqrt(2) * math.sin(math.sqrt(2)), abs=1e-15)
    assert z == 1.0
    assert t == pytest.approx(-(1 - math.cos(math.sqrt(2))), abs=1e-15)


def test_period_of_t():
    rng = np.random.default_rng(4)
    for _ in range(20):
        init = random_init(rng, rng.uniform(0.2, 2) * rng.choice([-1, 1]))
        T = am.period(init.xi[2])
        for s in np.linspace(0, 3, 7):
            assert abs(am.basic_closed_form(init, s)[3] - am.basic_closed_form(init, s + T)[3]) <= 1e-9


def test_z_and_q_affine():
    rng = np.random.default_rng(9)
    for xi3 in (0.0, 0.8):
        init = random_init(rng, xi3)
        for s in (0.0, 0.4, 2.5):
            assert am.basic_closed_form(init, s)[2] == pytest.approx(init.x0[2] + xi3 * s, abs=1e-15)
            assert am.extended_closed_form(init, s).values[1] == pytest.approx(init.psi0[1] + init.h[1] * s, abs=1e-15)


def test_zero_branch_residuals():
    rng = np.random.default_rng(12)
    for _ in range(10):
        init = random_init(rng, 0.0)
        for s in np.linspace(0, 2, 5):
            assert max(abs(r) for r in am.extended_closed_form(init, s).residuals) <= 1e-10


def test_zero_branch_base_residual():
    init = InitialData((0.3, 0.1, 0.2, -0.5), (0,) * 4, (0.4, 0.7, 0.0, -0.6), (0,) * 4)
    jets = [split_second(c) for c in am.basic_closed_form(init, Dual(Dual(1.3, 1.0), Dual(1.0, 0.0)))]
    acc = [j[3] for j in jets]
    rhs = am.basic_rhs([j[0] for j in jets], [j[1] for j in jets])
    assert np.max(np.abs(np.subtract(acc, rhs))) <= 1e-12


def test_zero_fiber_data_gives_zero_v():
    init = InitialData((0.2, 0.1, 0.3, 0.5), (0,) * 4, (0.4, -0.2, 1.1, 0.3), (0,) * 4)
    for s in (0.0, 0.7, 2.0):
        f = am.fiber_formulas(init, s)
        assert f["V"] == pytest.approx(0.0, abs=1e-15)
        assert f["Q"] == 0.0


def test_vertex_forms_vanish_without_h():
    for s in (0.0, 0.5, 3.0):
        assert am.vertex_closed_form((0.3, 1, 0.9, -0.4), (0,) * 4, s) == pytest.approx((0,) * 4, abs=1e-15)


def test_vertex_q_example():
    P, Q, U, V = am.vertex_closed_form((0, 0, 1, 0), (0, 1, 0, 0), 1.0)
    assert Q == 1.0


def test_constants_examples():
    init = InitialData((0.1, 0.2, 0.3, 0.4), (0.5, -0.5, 0.25, 0.75), (0.6, -0.2, 1.3, 0.8), (0.3, 0.9, -0.4, 0.2))
    k = am.closed_form_constants(init)
    a3 = init.xi[2]
    a1, a2, _, a4 = init.xi
    h1, h2, _, _ = init.h
    t0, Q0, V0 = init.x0[3], init.psi0[1], init.psi0[3]
    assert k.M == pytest.approx(2 * a1 * h2 - 2 * a3 * (h1 + 2 * a4 * Q0 + 2 * h2 * t0) + 4 * a3**2 * V0)
    assert k.K1 == pytest.approx(init.h[3] / (math.sqrt(2) * a3) + k.M1 / (4 * a3**2))
    assert k.K2 == pytest.approx(init.psi0[3] - k.M / (2 * a3**2))
    assert set(k.to_dict()) >= {"L1", "M", "K1", "H1", "R7", "N7", "C1", "C2"}


def test_constants_undefined_on_zero_branch():
    with pytest.raises(ValueError):
        am.closed_form_constants(InitialData.at_vertex((1, 0, 0, 0), (0,) * 4))


def test_ill_conditioned_guard():
    init = InitialData.at_vertex((1, 0, 1e-8, 0), (0,) * 4)
    with pytest.raises(IllConditioned):
        am.basic_closed_form(init, 1.0)
    with pytest.raises(IllConditioned):
        am.extended_closed_form(init, 1.0)
    with pytest.raises(IllConditioned):
        am.vertex_closed_form((1, 0, 1e-8, 0), (1, 0, 0, 0), 1.0)
    with pytest.warns(UserWarning):
        x, y, z, t = am.base_point(init, 1.0)
    assert x == pytest.approx(1.0, abs=1e-6) and z == pytest.approx(1e-8, abs=1e-12)


def test_supplementary_norm():
    assert am.supplementary_norm((1, 0, 0, 0), (1, 0, 0, 0)).stated == 1.0
    assert am.supplementary_norm((0,) * 4, (1, 2, 3, 4)).direct == 0.0
    n = am.supplementary_norm((1, 1, 1, 1), (1, 1, 1, 1))
    assert (n.direct, n.stated, n.discrepancy) == (8.0, 9.5, 1.5)


def test_direct_norm_matches_integrated_norm(am8):
    xi, h = (0.4, -0.3, 0.9, 0.6), (0.2, 0.5, -0.7, 0.1)
    traj = integrate(am.antimach_extended_connection(), InitialData.at_vertex(xi, h), 1.0, n_samples=3)
    assert traj.norms[0] == pytest.approx(am.supplementary_norm(xi, h).direct, abs=1e-15)


def test_zero_branch_fiber_matches_oracle():
    rng = np.random.default_rng(21)
    init = random_init(rng, 0.0)
    s = np.linspace(0, 2, 9)
    traj = integrate(am.antimach_extended_connection(), init, 2.0, s_eval=s)
    closed = np.array([am.extended_closed_form(init, u).values for u in s])
    assert np.max(np.abs(closed - traj.positions()[:, 4:])) <= 1e-8


def test_fiber_adjudication_example():
    # Q is exact; the stated V expression misses its constant term M / (2 xi3^2),
    # restoring it gives agreement with the oracle
    init = InitialData.at_vertex((0.5, 0.3, 0.8, -0.4), (0.2, 0.6, -0.3, 0.9))
    traj = integrate(am.antimach_extended_connection(), init, 0.5, s_eval=[0.0, 0.5])
    P, Q, U, V = traj.positions()[-1][4:]
    f = am.fiber_formulas(init, 0.5)
    k = am.closed_form_constants(init)
    assert f["V_forced"] - f["V"] == pytest.approx(k.M / (2 * 0.8**2), abs=1e-14)
    assert f["Q"] == pytest.approx(Q, abs=1e-12)
    assert f["V_forced"] == pytest.approx(V, abs=1e-10)
    assert abs(f["V"] - V) > 1e-3
    res = am.extended_closed_form(init, 0.5).residuals
    assert abs(res[1]) <= 1e-12 and abs(res[3]) > 1e-3


def test_branch_of():
    assert am.branch_of((1, 0, 0, 0)) == "xi3_zero"
    assert am.branch_of((1, 0, -0.5, 0)) == "xi3_nonzero"


def test_run_trial_deterministic():
    a = am.run_trial(3, 42, "xi3_nonzero", 1e-6, n_samples=9)
    b = am.run_trial(3, 42, "xi3_nonzero", 1e-6, n_samples=9)
    assert a.init == b.init
    assert [c.max_deviation for c in a.checks] == [c.max_deviation for c in b.checks]


def test_report_flags_every_failure_with_trace():
    rep = am.verify_closed_forms(2, seed=1, tol=1e-6, n_samples=21)
    checks = {}
    for t in rep.trials:
        for c in t.checks:
            checks.setdefault(c.name, []).append(c)
            assert c.passed == (c.max_deviation <= 1e-6)
            if not c.passed:
                assert c.trace and all("oracle" in row for row in c.trace)
    for name in ("x", "y", "z", "t", "Q"):
        assert all(c.passed for c in checks[name])
    doc = json.loads(rep.to_json())
    assert doc["schema"] == 1 and doc["passed"] is False
    assert len(doc["trials"]) == 6


def test_verify_rejects_bad_arguments():
    with pytest.raises(ValueError):
        am.verify_closed_forms(0)
    with pytest.raises(ValueError):
        am.verify_closed_forms(1, branch="sideways")
