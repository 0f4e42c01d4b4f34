import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riemext.antimach import antimach_extended_metric
from riemext.errors import DimensionMismatch, SingularMetric
from riemext.extension import ExtendedChart, extend, extended_signature, nonzero_components
from riemext.geometry import ConnectionField, MetricField, levi_civita, ricci_tensor
from riemext.registry import BUILTIN

coord = st.floats(-2, 2, allow_nan=False)
point8 = st.lists(coord, min_size=8, max_size=8)


def zero_connection(n):
    return ConnectionField(n, lambda c: [[[0.0] * n for _ in range(n)] for _ in range(n)])


def test_antimach_coefficients(am8):
    p = (0.3, -0.7, 1.1, 1.7, 0.2, -0.9, 0.4, 1.3)
    t, P, Q, U, V = p[3], p[4], p[5], p[6], p[7]
    g = am8(p)
    expected = np.zeros((8, 8))
    expected[2, 3] = expected[3, 2] = 2 * P
    expected[0, 3] = expected[3, 0] = 2 * Q
    expected[0, 2] = expected[2, 0] = -2 * V
    expected[2, 2] = 4 * t * V
    expected[:4, 4:] = expected[4:, :4] = np.eye(4)
    assert np.max(np.abs(g - expected)) <= 1e-15


def test_nonzero_components_listing(am8):
    comps = nonzero_components(am8, (0, 0, 0, 2, 1, 1, 1, 1))
    pairs = {c["pair"]: c["value"] for c in comps}
    assert pairs == {
        "dx dz": -2.0,
        "dx dt": 2.0,
        "dx dP": 1.0,
        "dy dQ": 1.0,
        "dz dz": 8.0,
        "dz dt": 2.0,
        "dz dU": 1.0,
        "dt dV": 1.0,
    }
    assert {c["pair"]: c["coefficient"] for c in comps}["dx dP"] == 2.0


@settings(max_examples=40, deadline=None)
@given(point8)
def test_block_structure_and_det(am8, p):
    g = am8(p)
    assert np.array_equal(g, g.T)
    assert not np.any(g[4:, 4:])
    assert np.array_equal(g[:4, 4:], np.eye(4))
    assert abs(np.linalg.det(g) - 1.0) <= 1e-12
    assert np.allclose(am8.inverse(g) @ g, np.eye(8), atol=1e-13)


@pytest.mark.parametrize("name", sorted(BUILTIN))
def test_det_sign_for_registered_connections(name):
    entry = BUILTIN[name]()
    conn = entry.connection
    n = conn.dim
    m = extend(conn)
    rng = np.random.default_rng(3)
    for p in rng.uniform(-1, 1, (5, 2 * n)):
        if name == "sphere2":
            p[0] = 0.3 + abs(p[0])
        assert abs(np.linalg.det(m(p)) - (-1) ** n) <= 1e-12


def test_zero_connection_extension_is_constant():
    m = extend(zero_connection(3))
    g = m((1, 2, 3, 4, 5, 6))
    assert np.array_equal(g, m((0,) * 6))
    assert extended_signature(m, (0,) * 6) == (3, 3)


def test_signature(am8):
    assert extended_signature(am8, (0,) * 8) == (4, 4)
    assert extended_signature(am8, (1,) * 8) == (4, 4)


def test_signature_singular():
    m = MetricField(2, lambda c: [[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(SingularMetric):
        extended_signature(m, (0.0, 0.0))


def test_dimension_mismatch(am8):
    with pytest.raises(DimensionMismatch):
        am8._generic([0.0] * 4)
    with pytest.raises(DimensionMismatch):
        ExtendedChart(2, ("a",), ("A", "B"))
    with pytest.raises(DimensionMismatch):
        extend(zero_connection(2), ExtendedChart.default(3))


def test_analytic_jet_matches_generic(am8):
    p = (0.2, -0.1, 0.7, 1.3, -0.8, 0.6, 0.1, 0.9)
    fast = am8.jet(p, 2)
    slow = MetricField.jet(am8, p, 2)
    for a, b in zip(fast, slow):
        assert np.max(np.abs(a - b)) <= 1e-14


def test_fiber_contracts_upper_index():
    # single symbol Gamma^0_11 = 1 in 2D: only g_11 = -2 Psi_0
    def ev(c):
        G = [[[0.0] * 2 for _ in range(2)] for _ in range(2)]
        G[0][1][1] = 1.0
        return G

    g = extend(ConnectionField(2, ev))((0, 0, 3.0, 5.0))
    assert g[1, 1] == -6.0 and g[0, 0] == 0.0


@settings(max_examples=20, deadline=None)
@given(point8)
def test_ricci_flat(am8, p):
    assert np.max(np.abs(ricci_tensor(levi_civita(am8), p))) <= 1e-10


def test_chart_names():
    m = antimach_extended_metric()
    assert m.chart.names == ("x", "y", "z", "t", "P", "Q", "U", "V")
    assert m.chart.total_dim == 8
