import copy

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from starkhmf.bignum import PrecComplex
from starkhmf.integral import (OracleFailure, PrecisionEscalation, bessel_kernel,
                               mellin_bessel_identity, nelson_contour_check, period_integral,
                               period_integral_from_expansions, petersson_classical,
                               petersson_from_expansions)

DIGITS = 8


@pytest.fixture(scope="module")
def run23(bc23):
    return period_integral(bc23, digits=DIGITS)


def _scaled(exps, s):
    out = []
    for e in exps:
        e2 = copy.copy(e)
        e2.values = [v * PrecComplex.make(s, 192) for v in e.values]
        out.append(e2)
    return out


def test_value_is_real_with_small_tail(run23):
    res, _ = run23
    assert abs(res.imag.value) < 10.0 ** -DIGITS
    assert res.tail.value < 10.0 ** -DIGITS
    assert res.value.err < 10.0 ** -DIGITS
    assert [cp.label for cp in res.cusps] == ["oo", "0"]


def test_zero_form(run23):
    _, exps = run23
    res = period_integral_from_expansions(_scaled(exps, 0), 5, digits=DIGITS)
    assert res.value.value == 0


def test_linearity(run23):
    res, exps = run23
    res3 = period_integral_from_expansions(_scaled(exps, 3), 5, digits=DIGITS)
    with mpmath.workprec(res.prec):
        assert abs(res3.value.value - 3 * res.value.value) < 10.0 ** -DIGITS


def test_cusp_contributions_add(run23):
    res, exps = run23
    singles = [period_integral_from_expansions([e], 5, digits=DIGITS) for e in exps]
    with mpmath.workprec(res.prec):
        assert abs(sum(s.value.value for s in singles) - res.value.value) < 10.0 ** -DIGITS


def test_longer_truncation_stays_within_tail(bc23, run23):
    res, _ = run23
    res2, _ = period_integral(bc23, digits=DIGITS + 4)
    assert res2.cutoff > res.cutoff
    assert all(b.m_max >= a.m_max for a, b in zip(res.cusps, res2.cusps))
    with mpmath.workprec(res.prec):
        assert abs(res2.value.value - res.value.value) <= res.tail.value + res2.tail.value + 1e-20


def test_too_few_coefficients(run23):
    _, exps = run23
    short = []
    for e in exps:
        e2 = copy.copy(e)
        e2.values = e.values[:3]
        short.append(e2)
    with pytest.raises(ValueError, match="coefficients needed"):
        period_integral_from_expansions(short, 5, digits=DIGITS)


def test_precision_guard(run23):
    _, exps = run23
    with pytest.raises(PrecisionEscalation):
        period_integral_from_expansions(exps, 5, digits=30, prec=64)


def test_record_keys(run23):
    rec = run23[0].record()
    assert "integral.value" in rec or "period.value" in rec
    assert any(k.endswith("cusp[0].M_m") for k in rec)


def test_petersson_scaling(f23):
    r1, _ = petersson_classical(f23, digits=DIGITS)
    r2, _ = petersson_classical(f23, digits=DIGITS, scale=2)
    with mpmath.workprec(r1.prec):
        assert abs(r2.value.value - 4 * r1.value.value) < 10.0 ** -(DIGITS - 1)
    assert r1.value.value > 0


def test_serial_and_parallel_agree(f23):
    r1, exps = petersson_classical(f23, digits=DIGITS)
    r2 = petersson_from_expansions(exps, 1, DIGITS, r1.prec, None, 2, 23)
    assert r1.value.value == r2.value.value


@pytest.mark.parametrize("x,nu", [(1, 1), (2.5, 1), (0.7, 2), (4, 0.5)])
def test_mellin_identity(x, nu):
    contour, closed = mellin_bessel_identity(x, nu)
    assert abs(contour - closed) < 1e-15


def test_mellin_identity_frozen_value():
    _, closed = mellin_bessel_identity(1, 1)
    assert abs(closed - mpmath.mpf("-0.18088279195652624")) < 1e-15


@settings(max_examples=8, deadline=None)
@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(0.5, 4)), min_size=1, max_size=3))
def test_contour_form_matches_closed_sum(profile):
    out = nelson_contour_check(profile)
    assert out["ok"]
    assert abs(out["difference"]) < 1e-8 * (1 + abs(out["closed"]))


def test_contour_limits():
    assert nelson_contour_check([(0, 1)])["closed"] == 0
    with pytest.raises((ValueError, OracleFailure)):
        nelson_contour_check([(1, 1)] * 6)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 60))
def test_kernel_bound(x):
    # the tail estimate relies on |kernel| <= 3 sqrt(x) e^-x once x >= 10
    v = abs(bessel_kernel(x, 1, 1))
    if x >= 10:
        assert v <= 3 * mpmath.sqrt(x) * mpmath.exp(-x)


@pytest.mark.parametrize("p,q,c", [(1, 0.5, 1.3), (2, 0.5, 2.1), (0, 1.5, 0.9)])
def test_tail_bound_dominates_direct_sum(p, q, c):
    from starkhmf.integral import _tail_bound
    X = 12.0
    direct = mpmath.mpf(0)
    n = 1
    while c * n <= 80:
        m = max(1, int((X / (c * n)) ** 2) + 1)
        while c * n * mpmath.sqrt(m) <= 80:
            u = c * n * mpmath.sqrt(m)
            direct += mpmath.mpf(m) ** p * u ** q * mpmath.exp(-u)
            m += 1
        n += 1
    bound = _tail_bound(1.0, p, q, c, X)
    assert direct <= bound <= 50 * direct


def test_d5_ratios_lie_in_q_sqrt5():
    # every unit of the quintic subfield gives log|u| / integral in Q(sqrt 5)
    from starkhmf.galois import d5_level47
    from starkhmf.hmf import base_change, load_form
    from starkhmf.quadfield import make_field
    from starkhmf.stark import MinkowskiData, d5_unit_log, search_norm_one_units
    from starkhmf.verify import recognize_quadratic
    f = base_change(load_form("47").eigensystem(), make_field(5))
    res, _ = period_integral(f, digits=DIGITS)
    rep = d5_level47()
    seen = 0
    for u in search_norm_one_units(rep.poly, 1):
        L = d5_unit_log(rep, MinkowskiData.from_unit(rep, u))
        if abs(L.value) < 1e-20:
            continue
        rc = recognize_quadratic(L / res.value, 5, 30, 10.0 ** -(DIGITS - 1))
        assert rc.ok and rc.recognized.q in (1, 2, 4), u.describe()
        seen += 1
    assert seen > 50
