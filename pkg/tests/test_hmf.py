import itertools
import math

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from starkhmf.galois import CycInt
from starkhmf.hmf import CoeffCache, DirichletCharacter, MissingData, base_change, load_form
from starkhmf.quadfield import make_field

M = 200


def _eta_23(n):
    # q prod (1 - q^k)(1 - q^23k), coefficients up to q^n
    c = [0] * (n + 1)
    c[1] = 1
    for k in range(1, n + 1):
        for step in (k, 23 * k):
            if step > n:
                continue
            for i in range(n, step - 1, -1):
                c[i] -= c[i - step]
    return c


def _theta_difference(forms, n):
    # (r_{Q0}(m) - r_{Q1}(m)) / 2 for a principal and a non-principal reduced form
    def reps(a, b, c):
        r = [0] * (n + 1)
        B = int(math.isqrt(4 * a * n)) + 2
        for x, y in itertools.product(range(-B, B + 1), repeat=2):
            v = a * x * x + b * x * y + c * y * y
            if 0 < v <= n:
                r[v] += 1
        return r
    r0, r1 = reps(*forms[0]), reps(*forms[1])
    return [(a - b) // 2 for a, b in zip(r0, r1)]


@pytest.mark.parametrize("label,forms", [("23", [(1, 1, 6), (2, 1, 3)]),
                                         ("31", [(1, 1, 8), (2, 1, 4)]),
                                         ("59", [(1, 1, 15), (3, 1, 5)])])
def test_coefficients_match_theta_series(label, forms):
    f = load_form(label).eigensystem()
    th = _theta_difference(forms, M)
    got = [f.coefficient_rational(m).to_rational() for m in range(1, M + 1)]
    assert got == th[1:]


def test_level23_matches_eta_product(f23):
    eta = _eta_23(M)
    assert [f23.coefficient_rational(m).to_rational() for m in range(1, M + 1)] == eta[1:]
    assert [f23.a_prime(p).to_rational() for p in (2, 3, 5)] == [-1, -1, 0]


def test_d5_coefficients():
    f = load_form("47").eigensystem()
    # a_2 = beta - 1 with beta = (1 + sqrt5)/2
    assert f.coefficient_rational(2).to_sqrt5() == (-0.5, 0.5)


@pytest.mark.parametrize("label", ["23", "31", "47", "59", "87"])
def test_euler_recursion_and_ramanujan(label):
    f = load_form(label).eigensystem()
    for p in list(sympy.primerange(2, 550))[:100]:
        a = f.a_prime(p)
        assert abs(complex(a)) <= 2 + 1e-12
        chi = f.chi_prime(p)
        for r in (2, 3):
            assert f.a_prime_power(p, r) == a * f.a_prime_power(p, r - 1) - chi * f.a_prime_power(p, r - 2)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 300), st.integers(1, 300))
def test_multiplicative(m, n):
    f = load_form("31").eigensystem()
    if math.gcd(m, n) == 1:
        assert f.coefficient_rational(m * n) == f.coefficient_rational(m) * f.coefficient_rational(n)


def test_base_change_prime_identities(q5, f23, bc23):
    chi = DirichletCharacter(-23)
    for p in sympy.primerange(2, 120):
        rec = q5.split_prime(p)
        a = f23.a_prime(p)
        if rec.kind == "inert" and p != 23:
            # a_(p) = a_p^2 - 2 chi(p) for the inert prime of norm p^2
            assert bc23.a_prime(rec.primes[0]) == a * a - CycInt(2 * chi(p))
        elif rec.kind == "split":
            assert all(bc23.a_prime(P) == a for P in rec.primes)


def test_base_change_rational_indices(bc23, f23):
    # a_(m) for 11: the two split primes each carry a_11
    assert bc23.coefficient_rational(11) == f23.a_prime(11) ** 2
    assert bc23.coefficient_rational(2).to_rational() == -1


def test_unknown_form():
    with pytest.raises((MissingData, KeyError)):
        load_form("9999")


def test_cache_round_trip(tmp_path, f23):
    fs = load_form("23")
    path = tmp_path / "c.cache"
    c1 = CoeffCache(path, fs.hash(1), 1)
    vals = c1.rational_coefficients(f23, 60)
    assert c1.misses == 60
    c1.flush()
    first = path.read_bytes()
    c2 = CoeffCache(path, fs.hash(1), 1)
    assert c2.rational_coefficients(f23, 60) == vals
    assert c2.hits == 60 and c2.misses == 0
    c2._dirty = True
    c2.flush()
    assert path.read_bytes() == first
    # a different form hash invalidates the file
    c3 = CoeffCache(path, "other", 1)
    assert not c3.entries
