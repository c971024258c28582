"""Taylor-Wiles primes and reduction of units to mod p^n residue data.

A Taylor-Wiles prime of level n for a form over F is a degree one prime Q of F
above a rational prime q = 1 mod p^n (q > 5, split in F, prime to the level)
at which the residual Frobenius has distinct eigenvalues.  Units of a number
field L are reduced at a prime above q, projected to the cyclic subgroup of
order p^n of the residue field and read off by a discrete logarithm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import sympy
from sympy import Poly, isprime, nextprime, symbols

from .galois import CycInt
from .hmf import EigenSystem
from .quadfield import kronecker

__all__ = [
    "FiniteField", "FFElt", "TWPrime", "UnitReduction", "EmbeddingMismatch", "NotFound",
    "ResidueChoice", "coefficient_field_prime", "find_tw_primes", "verify_tw_prime",
    "residue_choice", "reduce_unit", "discrete_log", "theta_dual_matrix", "rank_mod_p",
]

_x = symbols("x")


class EmbeddingMismatch(ValueError):
    pass


class NotFound(LookupError):
    def __init__(self, msg: str, bound: int):
        super().__init__(msg)
        self.bound = bound


# --------------------------------------------------------------------------
# finite fields F_p[x]/(g)
# --------------------------------------------------------------------------

class FiniteField:
    """F_p[t]/(g) with g monic irreducible, listed low-degree first."""

    def __init__(self, p: int, modulus: Sequence[int] = (0, 1)):
        self.p = int(p)
        g = [int(c) % self.p for c in modulus]
        if g[-1] != 1:
            raise ValueError("modulus must be monic")
        self.g = tuple(g)
        self.deg = len(g) - 1
        self.size = self.p ** self.deg

    def __repr__(self):
        return f"GF({self.p}^{self.deg})"

    def __eq__(self, o):
        return isinstance(o, FiniteField) and (self.p, self.g) == (o.p, o.g)

    def __hash__(self):
        return hash((self.p, self.g))

    def __call__(self, v) -> "FFElt":
        if isinstance(v, FFElt):
            return v
        if isinstance(v, (list, tuple)):
            return self._reduce(list(v))
        if isinstance(v, Fraction):
            return self(v.numerator) * self(v.denominator).inverse()
        return FFElt(self, (int(v) % self.p,) + (0,) * (self.deg - 1))

    @property
    def gen(self) -> "FFElt":
        """The class of t."""
        return self._reduce([0, 1])

    def _reduce(self, c: list) -> "FFElt":
        p, g, n = self.p, self.g, self.deg
        c = [int(x) % p for x in c]
        for i in range(len(c) - 1, n - 1, -1):
            a = c[i]
            if a:
                for j in range(n + 1):
                    c[i - n + j] = (c[i - n + j] - a * g[j]) % p
        c = c[:n] + [0] * (n - len(c))
        return FFElt(self, tuple(c))

    def elements(self):
        import itertools
        for t in itertools.product(range(self.p), repeat=self.deg):
            yield FFElt(self, tuple(reversed(t)))

    def primitive_element(self) -> "FFElt":
        """The least generator of the multiplicative group (in element order)."""
        order = self.size - 1
        qs = list(sympy.factorint(order))
        for e in self.elements():
            if e.is_zero():
                continue
            if all(e ** (order // r) != self(1) for r in qs):
                return e
        raise ArithmeticError("no primitive element")  # pragma: no cover


@dataclass(frozen=True)
class FFElt:
    F: FiniteField
    c: tuple

    def is_zero(self) -> bool:
        return not any(self.c)

    def __add__(self, o):
        o = self.F(o)
        return FFElt(self.F, tuple((a + b) % self.F.p for a, b in zip(self.c, o.c)))

    __radd__ = __add__

    def __neg__(self):
        return FFElt(self.F, tuple((-a) % self.F.p for a in self.c))

    def __sub__(self, o):
        return self + (-self.F(o))

    def __rsub__(self, o):
        return self.F(o) - self

    def __mul__(self, o):
        o = self.F(o)
        prod = [0] * (2 * self.F.deg - 1)
        for i, a in enumerate(self.c):
            if a:
                for j, b in enumerate(o.c):
                    prod[i + j] += a * b
        return self.F._reduce(prod)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        r = self.F(1)
        b = self
        while e:
            if e & 1:
                r = r * b
            b = b * b
            e >>= 1
        return r

    def inverse(self):
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero in a finite field")
        return self ** (self.F.size - 2)

    def __truediv__(self, o):
        return self * self.F(o).inverse()

    def __eq__(self, o):
        if isinstance(o, int):
            o = self.F(o)
        return isinstance(o, FFElt) and self.F == o.F and self.c == o.c

    def __hash__(self):
        return hash(self.c)

    def sqrt(self) -> "FFElt | None":
        """A square root, or None; deterministic (least root in element order)."""
        if self.is_zero():
            return self
        q = self.F.size
        if self ** ((q - 1) // 2) != self.F(1) and self.F.p != 2:
            return None
        best = None
        for e in self.F.elements():
            if e * e == self:
                return e
        return best

    def __str__(self):
        if self.F.deg == 1:
            return str(self.c[0])
        terms = []
        for i, a in enumerate(self.c):
            if a:
                terms.append(str(a) if i == 0 else (f"{a}*t" if i == 1 else f"{a}*t^{i}"))
        return "+".join(terms) or "0"

    def key(self):
        return self.c


def _irreducible_factors(poly_low: Sequence[int], p: int) -> list[tuple[int, ...]]:
    """Monic irreducible factors mod p (low-first tuples), sorted by degree then coefficients."""
    P = Poly(list(reversed([int(c) for c in poly_low])), _x, modulus=p)
    out = []
    for f, _ in P.factor_list()[1]:
        cs = [int(c) % p for c in f.all_coeffs()]
        lc_inv = pow(cs[0], -1, p)
        cs = [c * lc_inv % p for c in cs]
        out.append(tuple(reversed(cs)))
    out.sort(key=lambda t: (len(t), t))
    return out


def _poly_roots(poly_low: Sequence[int], F: FiniteField) -> list[FFElt]:
    """Roots of an integer polynomial in F, in element order."""
    roots = []
    for e in F.elements():
        v = F(0)
        for c in reversed(poly_low):
            v = v * e + int(c)
        if v.is_zero():
            roots.append(e)
    return roots


# --------------------------------------------------------------------------
# coefficient field reduction
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientPrime:
    """A prime of E = Q(zeta_m) above p: zeta -> the class of t in F_p[t]/(g)."""
    p: int
    m: int
    F: FiniteField

    def reduce(self, v) -> FFElt:
        if not isinstance(v, CycInt):
            v = CycInt(v)
        if v.m == 1 or v.is_rational():
            return self.F(v.to_rational() if v.m != 1 else v.c[0])
        z = self.F.gen
        out = self.F(0)
        for i, c in enumerate(v.c):
            if c:
                out = out + self.F(c) * z ** i
        return out


def coefficient_field_prime(p: int, m: int = 1, choice: int = 0) -> CoefficientPrime:
    """The ``choice``-th prime above p of Q(zeta_m), ordered by its residue polynomial."""
    if m == 1:
        return CoefficientPrime(p, 1, FiniteField(p))
    phi = {5: (1, 1, 1, 1, 1)}[m]
    facs = _irreducible_factors(phi, p)
    return CoefficientPrime(p, m, FiniteField(p, facs[choice]))


def _extend_quadratic(F: FiniteField, disc: FFElt):
    """A field containing sqrt(disc) for F prime (degree 1), and the root."""
    if F.deg != 1:
        raise NotImplementedError("eigenvalues are split only over prime residue fields")
    r = disc.sqrt()
    if r is not None:
        return F, F(r.c[0])
    D = disc.c[0]
    F2 = FiniteField(F.p, (-D % F.p, 0, 1))
    return F2, F2.gen


# --------------------------------------------------------------------------
# Taylor-Wiles primes
# --------------------------------------------------------------------------

@dataclass
class TWPrime:
    q: int
    prime: object  # PrimeIdeal of F (or the integer q over Q)
    n: int
    p: int
    alpha: FFElt
    beta: FFElt
    a_q: FFElt
    chi_q: FFElt

    @property
    def gen(self):
        return getattr(self.prime, "gen", self.prime)

    def record(self) -> str:
        g = self.gen
        gs = f"{g.a}+{g.b}w" if hasattr(g, "a") else str(g)
        return f"{self.q} {gs.replace('+-', '-')} {self.alpha} {self.beta}"


def _frobenius_data(sys: EigenSystem, P, ep: CoefficientPrime):
    a = ep.reduce(sys.a_prime(P))
    c = ep.reduce(sys.chi_prime(P))
    if sys.weight != 1:
        c = c * ep.F(sys.prime_norm(P) ** (sys.weight - 1))
    return a, c


def _eigenpair(a: FFElt, c: FFElt):
    F = a.F
    disc = a * a - 4 * c
    if F.p == 2:
        raise NotImplementedError("p = 2")
    F2, r = _extend_quadratic(F, disc)
    A = F2(list(a.c)) if F2 != F else a
    half = F2((F.p + 1) // 2)
    al, be = (A + r) * half, (A - r) * half
    return disc, al, be


def verify_tw_prime(sys: EigenSystem, tw: TWPrime, ep: CoefficientPrime | None = None) -> bool:
    """Recheck the three defining conditions from scratch."""
    q, p, n = tw.q, tw.p, tw.n
    if not isprime(q) or q <= 5 or q % (p ** n) != 1:
        return False
    N = sys.prime_norm(tw.prime)
    if N % (p ** n) != 1:
        return False
    if sys.fld is not None and kronecker(sys.fld.disc, q) != 1:
        return False
    if math.gcd(q, sys.level) != 1:
        return False
    ep = ep or coefficient_field_prime(p, sys.a_prime(tw.prime).m)
    a, c = _frobenius_data(sys, tw.prime, ep)
    if (a * a - 4 * c).is_zero():
        return False
    return tw.alpha != tw.beta and tw.alpha + tw.beta == tw.alpha.F(list(a.c)) \
        and tw.alpha * tw.beta == tw.alpha.F(list(c.c))


def find_tw_primes(sys: EigenSystem, p: int, n: int = 1, count: int = 5, bound: int = 10 ** 5,
                   e_choice: int = 0, start: int = 5, strict: bool = False) -> list[TWPrime]:
    """Taylor-Wiles primes of level n in increasing order of q.

    ``strict`` additionally insists on p unramified in F and prime to the level;
    by default these are only reported by the caller.  Raises NotFound when no
    prime qualifies below ``bound``.
    """
    if strict:
        if sys.fld is not None and sys.fld.disc % p == 0:
            raise ValueError(f"{p} ramifies in F")
        if sys.level % p == 0:
            raise ValueError(f"{p} divides the level")
    pn = p ** n
    out: list[TWPrime] = []
    q = start
    ep = None
    while len(out) < count:
        q = nextprime(q)
        if q > bound:
            break
        if q <= 5 or q % pn != 1 or sys.level % q == 0:
            continue
        if sys.fld is None:
            P = q
        else:
            if kronecker(sys.fld.disc, q) != 1:
                continue
            P = sys.fld.primes_above(q)[0]
        if ep is None:
            ep = coefficient_field_prime(p, sys.a_prime(P).m, e_choice)
        a, c = _frobenius_data(sys, P, ep)
        disc, al, be = _eigenpair(a, c)
        if disc.is_zero():
            continue
        out.append(TWPrime(q, P, n, p, al, be, a, c))
    if not out:
        raise NotFound(f"no Taylor-Wiles prime for p^n = {pn} below {bound}", bound)
    return out


# --------------------------------------------------------------------------
# unit reductions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ResidueChoice:
    """A prime of L = Q[x]/(poly) above q: the root ``root`` of poly in F."""
    q: int
    poly: tuple
    F: FiniteField
    root: FFElt

    def describe(self) -> str:
        return f"q={self.q} deg={self.F.deg} root={self.root}"


def residue_choice(poly: Sequence[int], q: int, degree: int | None = None,
                   root: int | Sequence[int] | None = None) -> ResidueChoice:
    """Pick the prime above q by its residue field and a root there.

    ``poly`` is leading-first (the unit-file convention).  The default is the least
    root in F_q, else in F_{q^2} built from the least quadratic factor.
    """
    low = list(reversed([int(c) for c in poly]))
    facs = _irreducible_factors(low, q)
    degs = sorted({len(f) - 1 for f in facs})
    if degree is None:
        degree = min(d for d in degs) if degs else 1
    if degree not in (1, 2):
        raise NotImplementedError("residue fields of degree > 2")
    if degree not in degs:
        raise EmbeddingMismatch(f"poly has no irreducible factor of degree {degree} mod {q} "
                                f"(factor degrees {degs})")
    if degree == 1:
        F = FiniteField(q)
    else:
        F = FiniteField(q, next(f for f in facs if len(f) == 3))
    roots = _poly_roots(low, F)
    if degree == 2:
        # roots generating F_{q^2}, not lying in F_q
        roots = [r for r in roots if any(r.c[1:])]
    if root is None:
        r = roots[0]
    else:
        r = F(list(root) if isinstance(root, (list, tuple)) else root)
        if r not in roots:
            raise EmbeddingMismatch(f"{r} is not a root of the polynomial in {F}")
    return ResidueChoice(q, tuple(int(c) for c in poly), F, r)


@dataclass
class UnitReduction:
    unit: str
    prime: str
    value: int  # discrete log in Z/p^n
    order: int  # p^n
    generator: FFElt
    projected: FFElt
    reduced: FFElt

    def check(self) -> bool:
        return self.generator ** self.value == self.projected


def discrete_log(g: FFElt, h: FFElt, order: int) -> int:
    """x mod order with g^x = h, g of exact order ``order`` (baby-step giant-step)."""
    m = math.isqrt(order - 1) + 1
    table = {}
    cur = g.F(1)
    for j in range(m):
        table.setdefault(cur.key(), j)
        cur = cur * g
    step = g ** (-m)
    gamma = h
    for i in range(m + 1):
        j = table.get(gamma.key())
        if j is not None:
            return (i * m + j) % order
        gamma = gamma * step
    raise ValueError("element is not in the subgroup generated by g")


def _reduce_expr(expr: Sequence[Fraction], r: FFElt) -> FFElt:
    F = r.F
    v = F(0)
    for c in expr:
        c = Fraction(c)
        if c.denominator % F.p == 0:
            raise ZeroDivisionError(f"coefficient {c} is not integral at {F.p}")
        v = v * r + F(c)
    return v


def reduce_unit(u, choice: ResidueChoice, p: int, n: int = 1) -> UnitReduction:
    """Discrete log of the image of u in the order p^n part of the residue field."""
    if tuple(u.poly) != tuple(choice.poly):
        raise EmbeddingMismatch("unit and residue choice live in different fields")
    F = choice.F
    pn = p ** n
    if (F.size - 1) % pn:
        raise ValueError(f"{pn} does not divide |{F}^x| = {F.size - 1}")
    red = _reduce_expr(u.expr, choice.root)
    if red.is_zero():
        raise ZeroDivisionError("unit reduces to zero")
    cof = (F.size - 1) // pn
    g = _subgroup_generator(F, pn)
    proj = red ** cof
    v = discrete_log(g, proj, pn)
    return UnitReduction(u.describe(), choice.describe(), v, pn, g, proj, red)


_GEN_CACHE: dict = {}


def _subgroup_generator(F: FiniteField, pn: int) -> FFElt:
    key = (F, pn)
    g = _GEN_CACHE.get(key)
    if g is None:
        g = F.primitive_element() ** ((F.size - 1) // pn)
        _GEN_CACHE[key] = g
    return g


def rank_mod_p(M: Sequence[Sequence[int]], p: int) -> int:
    rows = [[int(x) % p for x in r] for r in M]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = pow(rows[rank][c], -1, p)
        rows[rank] = [x * inv % p for x in rows[rank]]
        for i in range(len(rows)):
            if i != rank and rows[i][c]:
                f = rows[i][c]
                rows[i] = [(a - f * b) % p for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def theta_dual_matrix(reg, tw: TWPrime, choice: ResidueChoice | dict | None = None,
                      degree: int | None = None):
    """Table of reduce_unit(u_jk) values and its rank mod p.

    ``reg.units`` must hold the explicit d x d table of UnitVectors.  ``choice``
    fixes the prime above q for each field (a ResidueChoice, or a dict keyed by
    the defining polynomial); the default is residue_choice's least root.
    """
    if not reg.units:
        raise ValueError("theta_dual_matrix needs a regulator built from explicit units")
    choices: dict = {}
    if isinstance(choice, ResidueChoice):
        choices[choice.poly] = choice
    elif isinstance(choice, dict):
        choices.update(choice)
    table = []
    details = []
    for row in reg.units:
        vals, det = [], []
        for u in row:
            key = tuple(u.poly)
            if key not in choices:
                choices[key] = residue_choice(u.poly, tw.q, degree)
            r = reduce_unit(u, choices[key], tw.p, tw.n)
            vals.append(r.value)
            det.append(r)
        table.append(vals)
        details.append(det)
    return table, rank_mod_p(table, tw.p), details
