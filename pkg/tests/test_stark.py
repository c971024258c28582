from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from starkhmf.galois import s3_regular
from starkhmf.hmf import load_form
from starkhmf.stark import (MinkowskiData, SingularRegulator, UnitVector, base_change_units,
                            fundamental_unit_from_search, predicted_combinations,
                            regulator_from_matrix, search_norm_one_units, stark_unit_matrix)
from starkhmf.bignum import PrecReal

POLY23 = (1, -1, 0, 1)  # x^3 - x^2 + 1


@pytest.fixture(scope="module")
def u23():
    fs = load_form("23")
    return UnitVector(fs.poly, fs.unit)


def test_level23_unit(u23):
    assert u23.describe() == "a^2 - a"
    assert u23.norm() == 1
    assert abs(u23.log_abs().value - mpmath.mpf("0.2811995743234")) < 1e-12


def test_log_abs_against_sympy_root(u23):
    import sympy
    x = sympy.Symbol("x")
    (r,) = [z for z in sympy.Poly(x ** 3 - x ** 2 + 1).nroots(n=40) if z.is_real]
    assert abs(float(sympy.log(abs(r ** 2 - r))) - float(u23.log_abs().value)) < 1e-14


def test_trivial_unit_has_zero_log():
    one = UnitVector.one(POLY23)
    assert one.log_abs().value == 0


def test_search_finds_unit_and_generator():
    found = [u.describe() for u in search_norm_one_units(POLY23, 2)]
    assert "a^2 - a" in found and "a" in found
    assert fundamental_unit_from_search(POLY23, 3).describe() == "a^2 - a"


def test_table_units_have_norm_one():
    for lab in ("23", "31", "59", "87"):
        fs = load_form(lab)
        assert UnitVector(fs.poly, fs.unit).norm() == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(-3, 3), st.integers(-3, 3))
def test_log_is_homomorphism(e1, e2):
    a = UnitVector(POLY23, (1, 0))  # the root itself
    b = UnitVector(POLY23, (1, -1, 0))
    u = (a ** e1) * (b ** e2)
    with mpmath.workprec(192):
        expected = a.log_abs().value * e1 + b.log_abs().value * e2
        assert abs(u.log_abs().value - expected) < 1e-40
    assert abs(u.norm()) == 1


def test_minkowski_relation(u23):
    m = MinkowskiData.from_unit(s3_regular(), u23)
    assert abs(m.relation_residual().value) < 1e-50


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 20), st.floats(0.1, 20))
def test_base_change_regulator(a, b):
    reg = base_change_units(a, b)
    assert abs(reg.detR.value - mpmath.mpf(a) * b) < 1e-12 * (a * b)
    for s in reg.row_sums():
        assert abs(s.value - a) < 1e-12 * a
    assert reg.identity_residual() < 1e-10
    (v,) = predicted_combinations(reg, 2).values()
    assert abs(v.value * reg.detR.value - 1) < 1e-12


def test_predicted_combinations_degree_one():
    reg = base_change_units(2.0, 3.0)
    comb = predicted_combinations(reg, 1)
    assert len(comb) == 4
    with pytest.raises(ValueError):
        predicted_combinations(reg, 3)


def test_singular_regulator_detected():
    one = PrecReal.make(1, 128)
    with pytest.raises(SingularRegulator):
        regulator_from_matrix([[one, one], [one, one]])


def test_explicit_unit_table(u23):
    reg = stark_unit_matrix(None, [[u23]])
    assert abs(reg.detR.value - u23.log_abs().value) < 1e-40


def test_galois_root_labels():
    from starkhmf.galois import d5_level47
    from starkhmf.stark import galois_root_labels
    assert galois_root_labels(s3_regular()) == [0, 1, 2]
    rep = d5_level47()
    lab = galois_root_labels(rep)
    assert lab[0] == 0 and sorted(lab) == list(range(5))


def test_d5_minkowski_relation():
    from starkhmf.galois import d5_level47
    rep = d5_level47()
    u = UnitVector(rep.poly, (1, 0, 1, 1, -1))  # a^4 + a^2 + a - 1
    assert abs(u.norm()) == 1
    m = MinkowskiData.from_unit(rep, u)
    assert abs(m.relation_residual().value) < 1e-40
