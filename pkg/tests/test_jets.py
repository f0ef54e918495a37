"""Jet arithmetic against polynomial algebra and closed-form derivatives."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gwminimax.jets import Jet

coeff_lists = st.lists(
    st.floats(min_value=-3.0, max_value=3.0, allow_nan=False), min_size=1, max_size=6
)


def test_constant_and_variable():
    c = Jet.constant(2.5, 3)
    assert c.coeffs == (2.5, 0.0, 0.0, 0.0)
    t = Jet.variable(0.7, 3)
    assert t.coeffs == (0.7, 1.0, 0.0, 0.0)
    assert t.order == 3
    assert t.value == 0.7


def test_derivative_accessor_scales_by_factorial():
    j = Jet((1.0, 2.0, 3.0, 4.0))
    assert j.derivative(0) == 1.0
    assert j.derivative(2) == 3.0 * 2
    assert j.derivative(3) == 4.0 * 6
    with pytest.raises(ValueError):
        j.derivative(4)


@given(coeff_lists, coeff_lists)
def test_product_is_truncated_convolution(a, b):
    m = max(len(a), len(b)) - 1
    a = a + [0.0] * (m + 1 - len(a))
    b = b + [0.0] * (m + 1 - len(b))
    got = Jet(tuple(a)) * Jet(tuple(b))
    expected = np.convolve(a, b)[: m + 1]
    np.testing.assert_allclose(got.coeffs, expected, atol=1e-12)


@given(coeff_lists)
def test_scalar_ops_touch_the_right_coefficients(a):
    j = Jet(tuple(a))
    assert (j + 2.0).coeffs[0] == pytest.approx(a[0] + 2.0)
    assert (j + 2.0).coeffs[1:] == j.coeffs[1:]
    assert (2.0 - j).coeffs[0] == pytest.approx(2.0 - a[0])
    np.testing.assert_allclose((3.0 * j).coeffs, [3.0 * c for c in a])
    np.testing.assert_allclose((j / 2.0).coeffs, [c / 2.0 for c in a])


def test_integer_power_matches_repeated_multiplication():
    t = Jet((0.3, 1.0, 0.5, -0.2))
    by_mul = t * t * t * t * t
    np.testing.assert_allclose(t.power(5).coeffs, by_mul.coeffs, rtol=1e-14)
    # zero constant term is fine for integer powers
    z = Jet.variable(0.0, 4)
    assert z.power(3).coeffs == (0.0, 0.0, 0.0, 1.0, 0.0)
    assert z.power(0).coeffs == (1.0, 0.0, 0.0, 0.0, 0.0)


def test_real_power_matches_closed_form_derivatives():
    # g(x) = x^a about x0: g^(j)(x0) = a(a-1)...(a-j+1) x0^(a-j)
    a, x0 = 0.5, 0.37
    jet = Jet.variable(x0, 5).power(a)
    falling = 1.0
    for j in range(6):
        expected = falling * x0 ** (a - j) / math.factorial(j)
        assert jet.coeffs[j] == pytest.approx(expected, rel=1e-13)
        falling *= a - j


def test_real_power_rejects_nonpositive_constant_term():
    with pytest.raises(ValueError):
        Jet.variable(0.0, 3).power(0.5)
    with pytest.raises(ValueError):
        Jet((-1.0, 1.0)).power(1.5)


def test_compose_matches_polynomial_composition():
    # g(y) = 1 + 2y + 3y^2, h(x) = 2 - x + x^2, expand g(h(x)) about x0
    x0, order = 0.4, 4
    g_poly = np.polynomial.Polynomial([1.0, 2.0, 3.0])
    h_poly = np.polynomial.Polynomial([2.0, -1.0, 1.0])
    comp = g_poly(h_poly)
    h0 = h_poly(x0)
    inner = Jet(
        tuple(h_poly.deriv(j)(x0) / math.factorial(j) for j in range(order + 1))
    )
    outer = Jet(
        tuple(g_poly.deriv(j)(h0) / math.factorial(j) for j in range(order + 1))
    )
    got = outer.compose(inner)
    expected = [comp.deriv(j)(x0) / math.factorial(j) for j in range(order + 1)]
    np.testing.assert_allclose(got.coeffs, expected, rtol=1e-13, atol=1e-13)


def test_order_mismatch_raises():
    with pytest.raises(ValueError):
        Jet((1.0, 2.0)) * Jet((1.0, 2.0, 3.0))
    with pytest.raises(ValueError):
        Jet((1.0, 2.0)) + Jet((1.0,))
