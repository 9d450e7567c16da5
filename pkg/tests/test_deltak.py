import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sbepath.deltak import (MAX_ORDER, apply_delta_k, apply_delta_k_star, chk_coeff, chk_table, delta_k_coeffs,
                            is_order_boundary, leibniz_coeffs, order_for, reconstruction_residual,
                            reconstruction_residuals, run_selftest)
from sbepath.errors import ComputationError, ValidationError

orders = st.integers(0, 8)


def test_low_order_tables():
    assert delta_k_coeffs(0).coeffs == (1, -1)
    assert delta_k_coeffs(1).coeffs == (1, -3, 2)
    assert delta_k_coeffs(2).coeffs == (1, -7, 14, -8)


def test_order_range():
    delta_k_coeffs(MAX_ORDER)
    for bad in (-1, MAX_ORDER + 1, 1.5):
        with pytest.raises(ValidationError):
            delta_k_coeffs(bad)


@given(orders)
def test_recursion_defines_coefficients(k):
    # D_{k+1} F(r) = D_k F(r) - 2^{k+1} D_k F(r/2), checked on an integer probe
    F = lambda r: int(r * 2 ** 20) ** 3 % 1000003  # noqa: E731
    lhs = apply_delta_k(F, k + 1, 1.0)
    rhs = apply_delta_k(F, k, 1.0) - 2 ** (k + 1) * apply_delta_k(F, k, 0.5)
    assert lhs == rhs


@given(st.integers(0, MAX_ORDER))
def test_moments_vanish_exactly(k):
    c = delta_k_coeffs(k)
    assert all(c.moment(m) == 0 for m in range(k + 1))
    assert c.moment(k + 1) != 0
    assert sum(c.coeffs) == 0


@given(orders, st.lists(st.integers(-50, 50), min_size=1, max_size=9),
       st.fractions(Fraction(1, 64), 64))
def test_polynomials_annihilated_exactly(k, coeffs, r):
    coeffs = coeffs[: k + 1]
    poly = lambda x: sum(Fraction(a) * x ** i for i, a in enumerate(coeffs))  # noqa: E731
    c = delta_k_coeffs(k).coeffs
    assert sum(a * poly(r / 2 ** j) for j, a in enumerate(c)) == 0


@given(orders, st.floats(0.01, 20), st.floats(0.01, 20))
def test_adjoint_indicator_identity(k, x, y):
    lhs = apply_delta_k(lambda rr: rr >= y, k, x)
    rhs = apply_delta_k_star(lambda rr: rr <= x, k, y)
    assert lhs == rhs
    assert isinstance(lhs, int)


@given(st.integers(0, 30), st.integers(0, 6))
def test_chk_recursion_and_bound(h, k):
    c = chk_coeff(h, k)
    if k > 0:
        prev = chk_coeff(h - 1, k) if h else 0
        assert c == chk_coeff(h, k - 1) + 2 ** k * prev
    assert c <= 2 ** k * 2 ** (h * k)


def test_chk_closed_forms_and_brute_force():
    assert chk_table(10, 0) == (1,) * 11
    assert all(chk_coeff(h, 1) == 2 ** (h + 1) - 1 for h in range(30))
    # direct sum over compositions h_0 + h_1 + h_2 = h
    for h in range(8):
        brute = sum(2 ** (a1 + 2 * a2) for a1 in range(h + 1) for a2 in range(h + 1 - a1))
        assert chk_coeff(h, 2) == brute


def test_chk_validation():
    with pytest.raises(ValidationError):
        chk_coeff(-1, 0)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_reconstruction_converges(k):
    phi = lambda r: math.exp(-r * r) * r ** (k + 1)  # noqa: E731
    res = reconstruction_residuals(phi, k, 0.7, 60)
    assert res[-1] < 1e-10
    assert res[-1] <= res[5]


def test_reconstruction_gaussian_k0():
    assert reconstruction_residual(lambda r: math.exp(-r * r), 0, 1.0, 40) < 1e-12


def test_leibniz_coefficients():
    assert leibniz_coeffs(0) == (Fraction(1),)
    # D_{deg-1} of r^deg F equals sum_h b_h r^deg F(r / 2^h)
    for deg in (1, 2, 3):
        F = lambda r: math.cos(r)  # noqa: E731
        r = 0.8
        lhs = apply_delta_k(lambda x: x ** deg * F(x), deg - 1, r)
        rhs = math.fsum(float(b) * r ** deg * F(r / 2 ** h) for h, b in enumerate(leibniz_coeffs(deg)))
        assert abs(lhs - rhs) < 1e-12


def test_order_for_boundary():
    assert order_for(0.4, 1) == 1
    assert order_for(1.0, 1) == 1
    assert is_order_boundary(1.0, 1)
    assert not is_order_boundary(0.3, 2)
    assert order_for(0.0, 1) == 0


def test_vector_radii_and_nonfinite():
    r = np.array([0.5, 1.0, 2.0])
    out = apply_delta_k(lambda x: x ** 2, 2, r)
    np.testing.assert_allclose(out, 0.0, atol=1e-15)
    with pytest.raises(ComputationError, match="non-finite"):
        apply_delta_k(lambda x: math.inf, 0, 1.0)


def test_selftest_all_pass():
    rows = run_selftest(seed=3)
    assert [ok for _, ok, _ in rows] == [True] * len(rows)
