from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from starkhmf.bignum import (PrecComplex, PrecReal, bessel_crossover, bessel_k, bessel_k01,
                             exp_phase)


def _ref_k(nu, x):
    with mpmath.workprec(200):
        return mpmath.besselk(nu, x)


def test_k0_at_one():
    v = bessel_k(0, 1, 128)
    assert abs(v.value - mpmath.mpf("0.42102443824070834")) < 1e-16
    assert abs(v.value - _ref_k(0, 1)) < 1e-30


def test_k1_at_one():
    v = bessel_k(1, 1, 128)
    assert abs(v.value - mpmath.mpf("0.60190723019723458")) < 1e-16
    assert abs(v.value - _ref_k(1, 1)) < 1e-30


def test_errbound_contract():
    for x in (0.01, 0.5, 1, 7.9, 20, 35, 120):
        for order in (0, 1, 2):
            v = bessel_k(order, x, 96)
            assert abs(v.value - _ref_k(order, x)) <= v.err


def test_negative_order_symmetry():
    assert bessel_k(-1, 2.5, 96).value == bessel_k(1, 2.5, 96).value


def test_domain_and_order_errors():
    with pytest.raises(ValueError):
        bessel_k(0, 0)
    with pytest.raises(ValueError):
        bessel_k(0, -1)
    with pytest.raises((ValueError, NotImplementedError)):
        bessel_k(3, 1)


def test_crossover_scales_with_precision():
    assert bessel_crossover(53) == pytest.approx(8.0)
    assert bessel_crossover(106) == pytest.approx(16.0)


@pytest.mark.parametrize("x", [0.5, 1, 5, 30])
def test_derivative_of_k0_is_minus_k1(x):
    prec = 160
    h = mpmath.mpf(10) ** -12
    with mpmath.workprec(prec + 32):
        k0p, _ = bessel_k01(x + h, prec)
        k0m, _ = bessel_k01(x - h, prec)
        d = (k0p - k0m) / (2 * h)
    k1 = bessel_k(1, x, prec)
    # central difference error is O(h^2) K0''' ~ 1e-24
    assert abs(d + k1.value) < 1e-20


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=0.05, max_value=60), st.integers(min_value=0, max_value=1))
def test_doubled_precision_agrees(x, order):
    lo = bessel_k(order, x, 80)
    hi = bessel_k(order, x, 160)
    assert abs(lo.value - hi.value) <= lo.err + hi.err


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=0.05, max_value=50), st.floats(min_value=0.01, max_value=3))
def test_positive_and_decreasing(x, dx):
    for order in (0, 1):
        a = bessel_k(order, x, 64).value
        b = bessel_k(order, x + dx, 64).value
        assert a > 0 and b > 0 and b < a


def test_exp_phase_values():
    assert exp_phase(Fraction(0), 96).value == 1
    z = exp_phase(Fraction(1, 2), 96).value
    with mpmath.workprec(96):
        assert abs(z + 1) < 1e-28
    z = exp_phase(Fraction(1, 8), 96).value
    with mpmath.workprec(120):
        assert abs(z - mpmath.sqrt(2) / 2 * (1 + 1j)) < 1e-28


@settings(max_examples=50, deadline=None)
@given(st.integers(-1000, 1000), st.integers(1, 500))
def test_exp_phase_unit_modulus(a, b):
    z = exp_phase(Fraction(a, b), 96)
    with mpmath.workprec(96):
        assert abs(abs(z.value) - 1) <= 1e-26
        # periodic mod 1
        assert abs(z.value - exp_phase(Fraction(a, b) + 3, 96).value) < 1e-26


@settings(max_examples=60, deadline=None)
@given(st.floats(-1e6, 1e6, allow_nan=False), st.floats(-1e6, 1e6, allow_nan=False))
def test_error_propagation_monotone(a, b):
    x = PrecReal.make(a, 64, err=mpmath.mpf(2) ** -40)
    y = PrecReal.make(b, 64, err=mpmath.mpf(2) ** -30)
    for r in (x + y, x - y):
        assert r.err >= max(x.err, y.err)
    p = x * y
    assert p.err >= abs(mpmath.mpf(a)) * y.err


def test_complex_abs_is_hypot():
    z = PrecComplex.make(mpmath.mpc(3, 4), 96)
    assert abs(abs(z).value - 5) <= abs(z).err + 1e-25


def test_sqrt_log_exp_roundtrip():
    x = PrecReal.make(2, 128)
    y = x.log().exp()
    assert abs(y.value - 2) <= y.err + x.err + 1e-35
    r = x.sqrt()
    assert abs(r.value ** 2 - 2) < 1e-35


def test_decimal_rendering():
    assert PrecReal.make("0.5", 64).decimal(5).startswith("0.5")
