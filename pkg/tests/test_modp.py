import pytest
import sympy
from hypothesis import given, settings, strategies as st
from sympy.polys.domains import GF
from sympy.polys.matrices import DomainMatrix

from starkhmf.hmf import load_form
from starkhmf.modp import (FiniteField, NotFound, TWPrime, discrete_log, find_tw_primes,
                           rank_mod_p, reduce_unit, residue_choice, theta_dual_matrix,
                           verify_tw_prime)
from starkhmf.quadfield import kronecker
from starkhmf.stark import UnitVector, stark_unit_matrix


@pytest.fixture(scope="module")
def tw5(bc23):
    return find_tw_primes(bc23, 5, 1, count=6)


@pytest.fixture(scope="module")
def u23():
    fs = load_form("23")
    return UnitVector(fs.poly, fs.unit)


def test_tw_primes_level23(tw5):
    assert [t.q for t in tw5] == [11, 31, 41, 61, 71, 131]
    assert tw5[0].record().split()[2:] == ["1", "4"]


def test_tw_primes_recheck(bc23, tw5):
    for t in tw5:
        assert verify_tw_prime(bc23, t)
        assert t.q % 5 == 1 and kronecker(5, t.q) == 1
        assert t.alpha != t.beta
        assert t.alpha + t.beta == t.alpha.F(list(t.a_q.c))
        assert t.alpha * t.beta == t.alpha.F(list(t.chi_q.c))


def test_non_tw_prime_rejected(bc23, tw5):
    t = tw5[0]
    seven = bc23.fld.primes_above(7)[0]
    fake = TWPrime(7, seven, 1, 5, t.alpha, t.beta, t.a_q, t.chi_q)
    assert not verify_tw_prime(bc23, fake)
    swapped = TWPrime(t.q, t.prime, 1, 5, t.alpha, t.alpha, t.a_q, t.chi_q)
    assert not verify_tw_prime(bc23, swapped)


def test_higher_level_primes(bc23):
    ts = find_tw_primes(bc23, 3, 2, count=3)
    assert [t.q for t in ts] == [19, 109, 181]
    assert all(verify_tw_prime(bc23, t) for t in ts)


def test_not_found(bc23):
    with pytest.raises(NotFound):
        find_tw_primes(bc23, 5, 1, count=1, bound=10)


def test_strict_rejects_ramified(bc23):
    with pytest.raises(ValueError):
        find_tw_primes(bc23, 5, strict=True)


def test_unit_reduction(u23):
    ch = residue_choice(u23.poly, 11)
    r = reduce_unit(u23, ch, 5)
    assert r.check() and r.value == 4
    r2 = reduce_unit(u23 * u23, ch, 5)
    assert r2.value == (2 * r.value) % 5 == 3
    assert reduce_unit(UnitVector.one(u23.poly), ch, 5).value == 0


def test_unsupported_residue_degree(u23):
    with pytest.raises(NotImplementedError):
        reduce_unit(u23, residue_choice(u23.poly, 31), 5)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([11, 31, 41, 61, 101]), st.integers(0, 10 ** 6))
def test_discrete_log(q, x):
    F = FiniteField(q)
    g = F.primitive_element()
    assert discrete_log(g, g ** x, q - 1) == x % (q - 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 4), st.integers(0, 4), st.integers(1, 4), st.integers(0, 4))
def test_f25_field_axioms(a, b, c, e):
    F = FiniteField(5, (2, 0, 1))  # t^2 + 2
    x, y = F([a, b]), F([c, e])
    assert x * y == y * x
    assert (x + y) * y == x * y + y * y
    assert y * y.inverse() == F(1)
    assert x ** 24 == F(1) or x.is_zero()
    r = (x * x).sqrt()
    assert r is not None and r * r == x * x


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([3, 5, 7, 11]), st.lists(st.lists(st.integers(-20, 20), min_size=3, max_size=3),
                                                min_size=1, max_size=4))
def test_rank_matches_sympy(p, rows):
    dm = DomainMatrix([[GF(p)(x) for x in r] for r in rows], (len(rows), 3), GF(p))
    assert rank_mod_p(rows, p) == dm.rank()


def test_theta_dual_rank(u23, tw5):
    reg = stark_unit_matrix(None, [[u23]])
    table, rank, _ = theta_dual_matrix(reg, tw5[0])
    assert table == [[4]] and rank == 1
    one = UnitVector.one(u23.poly)
    reg1 = stark_unit_matrix(None, [[u23, one], [one, u23]])
    table, rank, _ = theta_dual_matrix(reg1, tw5[0])
    assert rank <= 2
    assert rank_mod_p([[0, 0], [0, 0]], 5) == 0


def test_theta_dual_needs_units(tw5):
    from starkhmf.stark import base_change_units
    with pytest.raises(ValueError):
        theta_dual_matrix(base_change_units(1.0, 2.0), tw5[0])
