import math
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from starkhmf.quadfield import QuadInt, UnsupportedField, kronecker, make_field


def test_fundamental_units(q5, q13):
    assert q5.eps == q5(0, 1)  # (1 + sqrt5)/2
    assert q13.eps == q13(1, 1)  # (3 + sqrt13)/2
    assert q5.eps.norm() == -1 and q13.eps.norm() == -1
    assert q5.eps.sigma_float(0) == pytest.approx((1 + math.sqrt(5)) / 2)
    assert make_field(17).eps.sigma_float(0) == pytest.approx(4 + math.sqrt(17))


def test_fields_without_norm_minus_one_unit_rejected():
    with pytest.raises(UnsupportedField):
        make_field(3)


def test_non_squarefree_rejected():
    with pytest.raises(UnsupportedField):
        make_field(12)
    with pytest.raises((UnsupportedField, ValueError)):
        make_field(1)


def test_splitting_behaviour(q5):
    assert q5.split_prime(11).kind == "split"
    assert q5.split_prime(23).kind == "inert"
    assert q5.split_prime(5).kind == "ramified"
    assert q5.split_prime(2).kind == "inert"
    with pytest.raises(ValueError):
        q5.split_prime(9)


@pytest.mark.parametrize("d", [5, 13, 17, 2, 29])
def test_kronecker_matches_sympy(d):
    F = make_field(d)
    for p in sympy.primerange(3, 200):
        if F.disc % p:
            assert kronecker(F.disc, p) == sympy.legendre_symbol(F.disc % p, p)


@pytest.mark.parametrize("d", [5, 13, 17])
def test_norms_multiply_to_p_squared(d):
    F = make_field(d)
    for p in sympy.primerange(2, 120):
        rec = F.split_prime(p)
        assert math.prod(P.norm for P in rec.primes) ** (2 if rec.kind == "ramified" else 1) == p * p
        for P in rec.primes:
            assert P.gen.is_totally_positive()
            assert abs(P.gen.norm()) == P.norm


@pytest.mark.parametrize("d", [5, 13, 17, 2, 29])
def test_different_generator(d):
    F = make_field(d)
    delta = F.different_generator()
    assert delta.is_totally_positive()
    assert abs(delta.norm()) == abs(F.disc)


def test_different_generator_q5(q5):
    assert q5.different_generator() == q5(2, 1)


def test_residue_rings(q5):
    (P23,) = q5.primes_above(23)
    R = q5.residue_ring(P23)
    assert len(R) == 529
    assert sum(1 for _ in R.units()) == 528
    P11 = q5.primes_above(11)[0]
    R11 = q5.residue_ring(P11)
    assert len(R11) == 11
    assert R11.is_zero(P11.gen)
    x = q5(3, 7)
    assert R11.reduce(R11.mul(x, R11.inverse(x))) == q5(1)


_ints = st.integers(-40, 40)


@settings(max_examples=80, deadline=None)
@given(_ints, _ints, _ints, _ints)
def test_norm_multiplicative(a, b, c, e):
    F = make_field(13)
    x, y = F(a, b), F(c, e)
    assert (x * y).norm() == x.norm() * y.norm()
    assert (x + y).trace() == x.trace() + y.trace()


@settings(max_examples=60, deadline=None)
@given(_ints, _ints)
def test_totally_positive_generator_is_associate(a, b):
    F = make_field(5)
    x = F(a, b)
    if x.is_zero():
        return
    g = F.totally_positive_generator(x)
    assert g.is_totally_positive()
    q = g / x
    assert q.is_integral() and abs(q.norm()) == 1
    # idempotent
    assert F.totally_positive_generator(g) == g


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 300))
def test_element_of_norm_exists_for_split_norms(n):
    F = make_field(5)
    x = F.element_of_norm(n)
    if x is not None:
        assert abs(x.norm()) == n
    if sympy.isprime(n) and kronecker(5, n) == 1:
        assert x is not None  # class number one


def test_inverse_and_division(q5):
    x = q5(Fraction(1, 2), 3)
    assert x * x.inverse() == q5(1)
    assert isinstance(x / 2, QuadInt)
