import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riemext import dual
from riemext.dual import Dual

finite = st.floats(-3, 3, allow_nan=False)


@given(finite)
def test_polynomial_derivative_exact(x):
    f = lambda u: 3 * u**3 - 2 * u * u + u - 7
    assert dual.derivative(f, x) == pytest.approx(9 * x * x - 4 * x + 1, rel=1e-14, abs=1e-13)
    assert dual.second_derivative(f, x) == pytest.approx(18 * x - 4, rel=1e-14, abs=1e-13)


@given(st.floats(0.1, 3))
def test_transcendental_derivatives(x):
    v, d1, d2 = dual.taylor2(lambda u: dual.sin(u) * dual.exp(u) + dual.log(u) + dual.sqrt(u), x)
    assert v == pytest.approx(math.sin(x) * math.exp(x) + math.log(x) + math.sqrt(x))
    assert d1 == pytest.approx(math.exp(x) * (math.sin(x) + math.cos(x)) + 1 / x + 0.5 / math.sqrt(x))
    assert d2 == pytest.approx(2 * math.exp(x) * math.cos(x) - 1 / x**2 - 0.25 * x**-1.5)


def test_quotient_and_powers():
    x = Dual(2.0, 1.0)
    y = 1.0 / x**2 + x ** (-1) + x**0.5 + (x / (x + 1.0))
    expected = -2 / 8 - 1 / 4 + 0.5 / math.sqrt(2) + 1 / 9
    assert y.du == pytest.approx(expected, rel=1e-15)
    assert x**0 == 1.0


def test_dual_exponent():
    y = Dual(2.0, 1.0) ** Dual(3.0, 0.0)
    assert y.re == pytest.approx(8.0)
    assert y.du == pytest.approx(12.0)


def test_split_second_mixed():
    p = dual.seed_second([1.5, -0.5], 0, 1)
    f = p[0] ** 2 * p[1] ** 3
    val, da, db, dab = dual.split_second(f)
    assert (val, da, db, dab) == pytest.approx((2.25 * -0.125, 3 * -0.125, 2.25 * 3 * 0.25, 6 * 1.5 * 0.25))


def test_split_second_of_constant_is_zero():
    assert dual.split_second(4.0) == (4.0, 0.0, 0.0, 0.0)


def test_jacobian_matches_analytic():
    J = dual.jacobian(lambda c: [c[0] * c[1], c[1] ** 2], [2.0, 3.0])
    assert np.array_equal(J, [[3.0, 0.0], [2.0, 6.0]])


@settings(max_examples=30)
@given(st.lists(st.floats(-2, 2), min_size=9, max_size=9))
def test_inverse_matches_numpy(vals):
    a = np.array(vals).reshape(3, 3) + 4 * np.eye(3)
    assert np.allclose(np.array(dual.inverse(a.tolist()), float), np.linalg.inv(a), atol=1e-12)


def test_inverse_of_dual_matrix_differentiates():
    # d/ds inv(A + sB) = -inv(A) B inv(A)
    A = np.array([[2.0, 1.0], [1.0, 3.0]])
    B = np.array([[0.0, 1.0], [1.0, 0.0]])
    m = [[Dual(A[i, j], B[i, j]) for j in range(2)] for i in range(2)]
    inv = dual.inverse(m)
    d = np.array([[v.du for v in row] for row in inv])
    Ai = np.linalg.inv(A)
    assert np.allclose(d, -Ai @ B @ Ai, atol=1e-15)


def test_inverse_singular():
    with pytest.raises(ZeroDivisionError):
        dual.inverse([[0.0, 0.0], [0.0, 0.0]])


def test_value_and_gradient_single_pass():
    val, grad = dual.value_and_gradient(lambda c: [c[0] * c[1], c[0] + c[1] ** 3], [1.0, 2.0], (2,))
    assert np.array_equal(val, [2.0, 9.0])
    assert np.array_equal(grad, [[2.0, 1.0], [1.0, 12.0]])


def test_array_valued_duals():
    u = np.linspace(0, 1, 5)
    y = dual.sin(Dual(u, np.ones_like(u)))
    assert np.allclose(y.du, np.cos(u))
