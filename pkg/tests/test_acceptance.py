"""Acceptance criteria, one test per criterion.

Each test prints one ``PASS``/``FAIL`` line with the measured value and the
tolerance it is held to. Run ``python3 tests/test_acceptance.py`` for the
lines alone, or ``pytest tests/test_acceptance.py`` (the lines are repeated in
the terminal summary).
"""

import json
import time

import numpy as np
import pytest

from riemext import antimach as am
from riemext import cli
from riemext import surfaces as sf
from riemext.geodesic import GeodesicState, InitialData, geodesic_rhs, integrate
from riemext.geometry import christoffel, kretschmann, levi_civita, ricci_tensor

SEED = 42
LINES: list[str] = []


def report(num, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {num}. {title}: {detail}"
    LINES.append(line)
    print(line)
    return ok


def hand_christoffel(t):
    G = np.zeros((4, 4, 4))
    G[3, 0, 2] = G[3, 2, 0] = 1.0
    G[1, 0, 3] = G[1, 3, 0] = -1.0
    G[3, 2, 2] = -2.0 * t
    G[0, 2, 3] = G[0, 3, 2] = -1.0
    return G


def test_1_christoffel_reproduction():
    metric = am.antimach_metric()
    pts = np.random.default_rng(SEED).uniform(-2, 2, (100, 4))
    t0 = time.perf_counter()
    err = max(np.max(np.abs(christoffel(metric, p) - hand_christoffel(p[3]))) for p in pts)
    dt = time.perf_counter() - t0
    ok = err <= 1e-12 and dt < 1.0
    assert report(1, "Christoffel reproduction", ok, f"max err {err:.3g} <= 1e-12, runtime {dt:.3f} s < 1 s")


def test_2_extension_reproduction():
    m = am.antimach_extended_metric()
    pts = np.random.default_rng(SEED).uniform(-2, 2, (100, 8))
    coef_err = det_err = 0.0
    for p in pts:
        t, P, Q, U, V = p[3:]
        ref = np.zeros((8, 8))
        ref[2, 3] = ref[3, 2] = 2 * P
        ref[0, 3] = ref[3, 0] = 2 * Q
        ref[0, 2] = ref[2, 0] = -2 * V
        ref[2, 2] = 4 * t * V
        ref[:4, 4:] = ref[4:, :4] = np.eye(4)
        g = m(p)
        coef_err = max(coef_err, np.max(np.abs(g - ref)))
        det_err = max(det_err, abs(np.linalg.det(g) - 1.0))
    ok = coef_err <= 1e-13 and det_err <= 1e-12
    assert report(2, "Extension reproduction", ok, f"coefficient err {coef_err:.3g} <= 1e-13, |det-1| {det_err:.3g} <= 1e-12")


def test_3_ricci_flatness():
    m8 = am.antimach_extended_metric()
    conn8 = levi_civita(m8)
    m4 = am.antimach_metric()
    rng = np.random.default_rng(SEED)
    p8 = rng.uniform(-2, 2, (100, 8))
    p4 = rng.uniform(-2, 2, (100, 4))
    t0 = time.perf_counter()
    r8 = max(np.max(np.abs(ricci_tensor(conn8, p))) for p in p8)
    r4 = max(np.max(np.abs(ricci_tensor(m4, p))) for p in p4)
    k4 = max(abs(kretschmann(m4, p)) for p in p4)
    dt = time.perf_counter() - t0
    ok = r8 <= 1e-10 and r4 <= 1e-10 and k4 <= 1e-9 and dt < 10
    assert report(
        3, "Ricci-flatness", ok,
        f"max|8R_ik| {r8:.3g} <= 1e-10, max|4R_ik| {r4:.3g} <= 1e-10, max|K4| {k4:.3g} <= 1e-9, runtime {dt:.2f} s < 10 s",
    )


def test_4_geodesic_system_reproduction():
    conn = am.antimach_extended_connection()
    rng = np.random.default_rng(SEED)
    err = 0.0
    for _ in range(100):
        pos = rng.uniform(-2, 2, 8)
        vel = rng.uniform(-1, 1, 8)
        generic = geodesic_rhs(conn, GeodesicState(0.0, tuple(pos), tuple(vel)))
        err = max(err, np.max(np.abs(generic - am.extended_rhs(pos, vel))))
    assert report(4, "Geodesic system reproduction", err <= 1e-12, f"max err {err:.3g} <= 1e-12")


def test_5_conservation():
    conn = am.antimach_extended_connection()
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(50):
        v = rng.uniform(-1, 1, 16)
        traj = integrate(conn, InitialData(v[:4], v[4:8], v[8:12], v[12:]), 10.0, tol=1e-12, n_samples=201)
        worst = max(worst, traj.norm_drift)
    assert report(5, "Norm conservation", worst <= 1e-9, f"max drift {worst:.3g} <= 1e-9 over s in [0,10], 50 inits")


@pytest.fixture(scope="module")
def reports():
    zero = am.verify_closed_forms(20, seed=SEED, tol=1e-8, branch="xi3_zero")
    nonzero = am.verify_closed_forms(20, seed=SEED, tol=1e-6, branch="xi3_nonzero", vertex=True)
    return zero, nonzero


def _worst(rep, names, vertex=None):
    out = 0.0
    for t in rep.trials:
        if vertex is not None and t.vertex != vertex:
            continue
        for c in t.checks:
            if c.name in names:
                out = max(out, c.max_deviation)
    return out


def test_6_basic_closed_forms(reports):
    zero, nonzero = reports
    base = ("x", "y", "z", "t")
    wz = _worst(zero, base)
    wn = _worst(nonzero, base, vertex=False)
    ok = wz <= 1e-6 and wn <= 1e-6
    assert report(6, "Basic closed forms", ok, f"zero branch {wz:.3g}, nonzero branch {wn:.3g} <= 1e-6 over one period, 20 inits each")


def test_7_fiber_adjudication(reports):
    zero, nonzero = reports
    wz = _worst(zero, ("P", "Q", "U", "V"))
    wq = _worst(nonzero, ("Q", "Q_vertex"))
    silent = []
    flagged = set()
    for t in nonzero.trials:
        for c in t.checks:
            if c.max_deviation > 1e-6 and (c.passed or not c.trace):
                silent.append((t.index, c.name))
            if not c.passed:
                flagged.add(c.name)
                assert all("equation_residual" in row or "_vs_" in c.name or "dot" in c.name for row in c.trace)
    # traces are reproducible: rerun one flagged trial and compare
    first = next(t for t in nonzero.trials if not t.passed)
    again = am.run_trial(first.index, SEED, "xi3_nonzero", 1e-6, vertex=first.vertex)
    same = [c.trace for c in first.checks] == [c.trace for c in again.checks]
    names = {c.name for t in nonzero.trials for c in t.checks}
    covered = {"P", "Q", "U", "V", "P_vertex", "Q_vertex", "U_vertex", "V_vertex"} <= names
    ok = wz <= 1e-8 and wq <= 1e-12 and not silent and same and covered
    assert report(
        7, "Fiber solution adjudication", ok,
        f"zero branch {wz:.3g} <= 1e-8; Q {wq:.3g} (exact); flagged with traces: {sorted(flagged)}; "
        f"silent disagreements {len(silent)}; trace reproducible {same}",
    )


def test_8_translation_surfaces():
    conn = am.antimach_connection()
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    res = mix = ydev = 0.0
    for _ in range(20):
        m = sf.build_family_surface(sf.random_polynomial_generators(rng, degree=3))
        rep = sf.separability_report(m, 50, conn)
        X, Xu, Xv, Xuv = m.grid_partials(*m.grid(50, 50))
        uu, vv = np.meshgrid(*m.grid(50, 50), indexing="ij")
        res = max(res, max(rep.max_residual))
        mix = max(mix, rep.max_mixed["x"], rep.max_mixed["z"], rep.max_mixed["t"])
        ydev = max(ydev, float(np.max(np.abs(Xuv[1] - sf.family_y_mixed(m.generators, uu, vv)))))
    dt = time.perf_counter() - t0
    ok = res <= 1e-9 and mix <= 1e-10 and ydev <= 1e-9 and dt < 5
    assert report(
        8, "Translation surfaces", ok,
        f"max residual {res:.3g} <= 1e-9, x/z/t mixed {mix:.3g} <= 1e-10, y mixed vs -2(C3+f+g)f'g' {ydev:.3g} <= 1e-9, "
        f"runtime {dt:.2f} s < 5 s",
    )


def test_9_determinism(tmp_path):
    outs = []
    codes = []
    for k in range(2):
        path = tmp_path / f"run{k}.json"
        codes.append(cli.main(["verify", "--trials", "25", "--seed", "42", "--out", str(path)]))
        outs.append(path.read_bytes())
    doc = json.loads(outs[0])
    ok = outs[0] == outs[1] and doc["schema"] == 1 and codes[0] == codes[1]
    assert report(9, "Determinism", ok, f"byte-identical {outs[0] == outs[1]} ({len(outs[0])} bytes), exit codes {codes}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
