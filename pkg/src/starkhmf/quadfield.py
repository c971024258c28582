"""Exact arithmetic in real quadratic fields Q(sqrt d).

Elements are stored as ``a + b*omega`` with rational coordinates (integral
elements have integer ones); ``omega = (1+sqrt d)/2`` when d = 1 mod 4 and
``sqrt d`` otherwise.  The two real embeddings are indexed 0 (sqrt d -> +sqrt d)
and 1 (sqrt d -> -sqrt d).

Q(sqrt d) here always has narrow class number one, so every ideal is recorded
through a totally positive generator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

import mpmath
from sympy import factorint, isprime, jacobi_symbol

from .bignum import DEFAULT_PREC, PrecReal


class UnsupportedField(ValueError):
    pass


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a | n); (a | -1) is the sign of a."""
    if n == 0:
        return 1 if abs(a) == 1 else 0
    res = 1
    if n < 0:
        n = -n
        if a < 0:
            res = -1
    while n % 2 == 0:
        n //= 2
        if a % 2 == 0:
            return 0
        if a % 8 in (3, 5):
            res = -res
    if n == 1:
        return res
    return res * int(jacobi_symbol(a % n, n))


# --------------------------------------------------------------------------
# elements
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuadInt:
    """a + b*omega in a fixed QuadField; a, b are Fractions (integers when integral)."""

    a: Fraction
    b: Fraction
    fld: "QuadField" = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "a", _frac(self.a))
        object.__setattr__(self, "b", _frac(self.b))

    # ring structure -----------------------------------------------------
    def _c(self, o) -> "QuadInt":
        if isinstance(o, QuadInt):
            return o
        return QuadInt(_frac(o), Fraction(0), self.fld)

    def __add__(self, o):
        o = self._c(o)
        return QuadInt(self.a + o.a, self.b + o.b, self.fld)

    __radd__ = __add__

    def __neg__(self):
        return QuadInt(-self.a, -self.b, self.fld)

    def __sub__(self, o):
        return self + (-self._c(o))

    def __rsub__(self, o):
        return self._c(o) - self

    def __mul__(self, o):
        o = self._c(o)
        t, n = self.fld.omega_trace, self.fld.omega_norm
        # omega^2 = t*omega - n
        bb = self.b * o.b
        return QuadInt(self.a * o.a - n * bb, self.a * o.b + self.b * o.a + t * bb, self.fld)

    __rmul__ = __mul__

    def conj(self) -> "QuadInt":
        # omega' = t - omega
        t = self.fld.omega_trace
        return QuadInt(self.a + t * self.b, -self.b, self.fld)

    def norm(self) -> Fraction:
        return (self * self.conj()).a

    def trace(self) -> Fraction:
        return 2 * self.a + self.fld.omega_trace * self.b

    def inverse(self) -> "QuadInt":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero")
        c = self.conj()
        return QuadInt(c.a / n, c.b / n, self.fld)

    def __truediv__(self, o):
        return self * self._c(o).inverse()

    def __rtruediv__(self, o):
        return self._c(o) * self.inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        r = self.fld.one
        x = self
        while e:
            if e & 1:
                r = r * x
            x = x * x
            e >>= 1
        return r

    def __eq__(self, o):
        if not isinstance(o, QuadInt):
            try:
                o = self._c(o)
            except (TypeError, ValueError):
                return NotImplemented
        return self.a == o.a and self.b == o.b

    def __hash__(self):
        return hash((self.a, self.b, self.fld.d))

    def is_integral(self) -> bool:
        return self.a.denominator == 1 and self.b.denominator == 1

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def is_rational(self) -> bool:
        return self.b == 0

    def divides(self, o) -> bool:
        """self | o in O_F."""
        return (self._c(o) / self).is_integral()

    # embeddings ---------------------------------------------------------
    def sigma(self, j: int, prec: int = DEFAULT_PREC) -> mpmath.mpf:
        with mpmath.workprec(prec):
            w = self.fld.omega_embedding(j, prec)
            return mpmath.mpf(self.a.numerator) / self.a.denominator + \
                mpmath.mpf(self.b.numerator) / self.b.denominator * w

    def sigma_float(self, j: int) -> float:
        return float(self.a) + float(self.b) * self.fld.omega_float[j]

    def embeddings(self, prec: int = DEFAULT_PREC) -> tuple[PrecReal, PrecReal]:
        return tuple(PrecReal.make(self.sigma(j, prec + 16), prec) for j in (0, 1))

    def is_totally_positive(self) -> bool:
        # exact sign test: x = a + b omega > 0 at both places
        return self._sign(0) > 0 and self._sign(1) > 0

    def _sign(self, j: int) -> int:
        # sign of a + b*omega_j exactly, with omega_j = (t + s_j*sqrt(disc))/2 over the
        # common representation r + s*sqrt(d): handled by squaring comparisons
        fld = self.fld
        if fld.i_flag == 0:
            r = self.a + self.b / 2
            s = self.b / 2
        else:
            r, s = self.a, self.b
        if j == 1:
            s = -s
        # sign of r + s sqrt(d)
        if r >= 0 and s >= 0:
            return 0 if (r == 0 and s == 0) else 1
        if r <= 0 and s <= 0:
            return -1
        cmp = r * r - s * s * fld.d
        if r > 0:
            return 1 if cmp > 0 else -1
        return 1 if cmp < 0 else -1

    def sign(self, j: int) -> int:
        return self._sign(j)

    def __repr__(self):
        return f"QuadInt({self.a}+{self.b}w)"

    def __str__(self):
        return f"{self.a}{'+' if self.b >= 0 else '-'}{abs(self.b)}*w"

    def key(self) -> tuple[int, int]:
        assert self.is_integral()
        return int(self.a), int(self.b)


# --------------------------------------------------------------------------
# primes and ideals
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PrimeIdeal:
    p: int
    kind: str  # 'split' | 'inert' | 'ramified'
    norm: int
    gen: QuadInt  # totally positive generator
    root: int | None = None  # image of omega in O/P = F_p (degree one primes)
    index: int = 0  # 0/1 distinguishes the two primes above a split p

    def __repr__(self):
        return f"P({self.p},{self.kind}{'' if self.kind != 'split' else self.index},gen={self.gen})"

    def key(self):
        return (self.norm, self.gen.key())


@dataclass(frozen=True, eq=False)
class IdealF:
    gen: QuadInt
    norm: int

    def __eq__(self, o):
        return isinstance(o, IdealF) and self.norm == o.norm and self.gen.divides(o.gen) \
            and o.gen.divides(self.gen)

    def __hash__(self):
        return hash(self.norm)


@dataclass(frozen=True)
class SplitRecord:
    p: int
    kind: str
    primes: tuple[PrimeIdeal, ...]


# --------------------------------------------------------------------------
# field
# --------------------------------------------------------------------------

def _squarefree(n: int) -> bool:
    return n > 1 and all(e == 1 for e in factorint(n).values())


class QuadField:
    """Q(sqrt d) with its fundamental unit, different and prime data."""

    def __init__(self, d: int, prec: int = DEFAULT_PREC, check: bool = True):
        if not _squarefree(d):
            raise UnsupportedField(f"d={d} is not a squarefree integer > 1")
        self.d = d
        self.prec = prec
        self.i_flag = 0 if d % 4 == 1 else 1
        self.disc = d if self.i_flag == 0 else 4 * d
        if self.i_flag == 0:
            self.omega_trace, self.omega_norm = Fraction(1), Fraction(1 - d, 4)
        else:
            self.omega_trace, self.omega_norm = Fraction(0), Fraction(-d)
        s = math.sqrt(d)
        self.omega_float = ((1 + s) / 2, (1 - s) / 2) if self.i_flag == 0 else (s, -s)
        self._omega_cache: dict[tuple[int, int], mpmath.mpf] = {}
        self.one = self(1)
        self.zero = self(0)
        self.omega = self(0, 1)
        self.fund_unit = self._fundamental_unit()
        if self.fund_unit.norm() != -1:
            raise UnsupportedField(f"Q(sqrt {d}) has no unit of norm -1")
        if check and not self._class_number_one():
            raise UnsupportedField(f"Q(sqrt {d}) does not have class number one")
        self.sqrt_d = PrecReal.make(mpmath.sqrt(mpmath.mpf(d)), prec)

    def __call__(self, a, b=0) -> QuadInt:
        return QuadInt(_frac(a), _frac(b), self)

    def __repr__(self):
        return f"QuadField({self.d})"

    def __eq__(self, o):
        return isinstance(o, QuadField) and o.d == self.d

    def __hash__(self):
        return hash(("QuadField", self.d))

    def sqrt_elt(self) -> QuadInt:
        return self(-1, 2) if self.i_flag == 0 else self(0, 1)

    def omega_embedding(self, j: int, prec: int) -> mpmath.mpf:
        key = (j, prec)
        if key not in self._omega_cache:
            with mpmath.workprec(prec + 8):
                s = mpmath.sqrt(self.d) * (1 if j == 0 else -1)
                w = (1 + s) / 2 if self.i_flag == 0 else s
            self._omega_cache[key] = w
        return self._omega_cache[key]

    # units --------------------------------------------------------------
    def _fundamental_unit(self) -> QuadInt:
        # continued fraction of omega; the first convergent p/q with
        # N(p - q*omega) = +-1 gives the fundamental unit.
        d = self.d
        if self.i_flag == 0:
            P, Q = 1, 2  # omega = (P + sqrt d)/Q
        else:
            P, Q = 0, 1
        # make Q | d - P^2 as required by the standard recurrence
        dd = d
        if (dd - P * P) % Q:
            P, Q, dd = P * Q, Q * Q, d * Q * Q
        p0, p1 = 1, 0
        q0, q1 = 0, 1
        r = math.isqrt(dd)
        for _ in range(10000):
            a = (P + r) // Q
            p0, p1 = a * p0 + p1, p0
            q0, q1 = a * q0 + q1, q0
            u = self(p0, -q0)
            if abs(u.norm()) == 1:
                return self._normalize_unit(u)
            P = a * Q - P
            Q = (dd - P * P) // Q
        raise UnsupportedField("continued fraction for the fundamental unit did not terminate")

    def _normalize_unit(self, u: QuadInt) -> QuadInt:
        cands = [u, -u, u.conj(), -u.conj()]
        cands = [c for c in cands if c.sigma_float(0) > 1]
        return min(cands, key=lambda c: (abs(c.b), c.a))

    @property
    def eps(self) -> QuadInt:
        return self.fund_unit

    @property
    def tp_unit(self) -> QuadInt:
        """Generator of the totally positive units (eps^2 when N(eps) = -1)."""
        return self.fund_unit * self.fund_unit

    def place_order(self) -> tuple[int, int]:
        """Embedding indices (first, second) with eps negative at the first."""
        return (1, 0) if self.fund_unit.sign(1) < 0 else (0, 1)

    # generators ---------------------------------------------------------
    def element_of_norm(self, n: int, congruence=None) -> QuadInt | None:
        """Some integral x with |N(x)| = n (and x satisfying ``congruence``), or None."""
        eps = float(self.fund_unit.sigma_float(0))
        bmax = int(2 * math.sqrt(n) * eps / math.sqrt(self.d)) + 2
        t, nn = self.omega_trace, self.omega_norm
        for b in range(0, bmax + 1):
            for sb in ((b,) if b == 0 else (b, -b)):
                # N(a + b w) = a^2 + t a b + nn b^2 = +-n
                for target in (n, -n):
                    disc = (t * sb) ** 2 - 4 * (nn * sb * sb - target)
                    if disc < 0:
                        continue
                    num = disc.numerator * disc.denominator
                    r = math.isqrt(num)
                    if r * r != num:
                        continue
                    rr = Fraction(r, disc.denominator)
                    for a in ((-t * sb + rr) / 2, (-t * sb - rr) / 2):
                        if a.denominator == 1:
                            x = self(a, sb)
                            if congruence is None or congruence(x):
                                return x
        return None

    def totally_positive_generator(self, g: QuadInt) -> QuadInt:
        """The totally positive associate of g of least trace.

        Ties (a conjugate pair of equal trace) go to the associate with
        positive omega-coordinate, so sqrt(5)*eps0 = 2 + omega is the different
        generator of Q(sqrt 5).
        """
        if g.is_zero():
            raise ValueError("zero has no totally positive generator")
        s0, s1 = g.sign(0), g.sign(1)
        eps = self.fund_unit
        if s0 != s1:
            g = g * eps
            s0 = g.sign(0)
        if s0 < 0:
            g = -g
        assert g.is_totally_positive()
        u = self.tp_unit
        ui = u.inverse()
        # trace(g u^k) is convex in k: walk downhill in either direction
        best = g
        for step in (u, ui):
            cur = best
            while True:
                nxt = cur * step
                if (nxt.trace(), abs(nxt.b), -nxt.b) < (best.trace(), abs(best.b), -best.b):
                    best = cur = nxt
                else:
                    break
        # tie-break among equal traces
        for cand in (best * u, best * ui):
            if (cand.trace(), abs(cand.b), -cand.b) < (best.trace(), abs(best.b), -best.b):
                best = cand
        return best

    def different_generator(self) -> QuadInt:
        """Totally positive generator 2^i sqrt(d) * (unit) of the different."""
        base = self.sqrt_elt() * (2 if self.i_flag else 1)
        # multiply by a norm -1 unit: sqrt d itself has norm -d < 0
        return self.totally_positive_generator(base)

    # primes -------------------------------------------------------------
    @lru_cache(maxsize=None)
    def split_prime(self, p: int) -> SplitRecord:
        if not isprime(p):
            raise ValueError(f"{p} is not prime")
        k = kronecker(self.disc, p)
        if k == -1:
            pr = PrimeIdeal(p, "inert", p * p, self(p))
            return SplitRecord(p, "inert", (pr,))
        roots = self._omega_roots_mod(p)
        if k == 0:
            r = roots[0]
            g = self.element_of_norm(p, lambda x: (x.a + x.b * r) % p == 0)
            pr = PrimeIdeal(p, "ramified", p, self.totally_positive_generator(g), root=r)
            return SplitRecord(p, "ramified", (pr,))
        out = []
        for idx, r in enumerate(sorted(roots)):
            g = self.element_of_norm(p, lambda x, r=r: (x.a + x.b * r) % p == 0)
            out.append(PrimeIdeal(p, "split", p, self.totally_positive_generator(g), root=r,
                                  index=idx))
        return SplitRecord(p, "split", tuple(out))

    def _omega_roots_mod(self, p: int) -> list[int]:
        t, n = int(self.omega_trace), int(self.omega_norm)
        return [x for x in range(p) if (x * x - t * x + n) % p == 0] if p < 50000 else \
            self._roots_large(p, t, n)

    def _roots_large(self, p, t, n):
        from sympy.ntheory import sqrt_mod
        if p == 2:
            return [x for x in range(2) if (x * x - t * x + n) % 2 == 0]
        disc = (t * t - 4 * n) % p
        r = sqrt_mod(disc, p)
        inv2 = pow(2, -1, p)
        return sorted({((t + r) * inv2) % p, ((t - r) * inv2) % p})

    def primes_above(self, p: int) -> tuple[PrimeIdeal, ...]:
        return self.split_prime(p).primes

    def valuation(self, x: QuadInt, P: PrimeIdeal) -> int:
        if x.is_zero():
            raise ValueError("valuation of zero")
        v = 0
        g = P.gen
        while True:
            y = x / g
            if not y.is_integral():
                return v
            x = y
            v += 1

    def factor(self, x: QuadInt) -> list[tuple[PrimeIdeal, int]]:
        """Prime ideal factorization of (x) for integral nonzero x."""
        n = abs(x.norm())
        out = []
        for p in sorted(factorint(int(n))):
            for P in self.primes_above(p):
                v = self.valuation(x, P)
                if v:
                    out.append((P, v))
        return out

    def prime_of_norm(self, n: int) -> list[PrimeIdeal]:
        f = factorint(n)
        if len(f) != 1:
            return []
        (p, e), = f.items()
        return [P for P in self.primes_above(p) if P.norm == n]

    def ideal(self, g: QuadInt) -> IdealF:
        return IdealF(self.totally_positive_generator(g), int(abs(g.norm())))

    def residue_ring(self, P: PrimeIdeal) -> "ResidueRing":
        return ResidueRing(self, P)

    # class number -------------------------------------------------------
    def _class_number_one(self) -> bool:
        bound = math.sqrt(self.disc) / 2
        for p in range(2, int(bound) + 1):
            if not isprime(p):
                continue
            if kronecker(self.disc, p) == -1:
                continue
            if self.element_of_norm(p) is None:
                return False
        return True

    def residue_degree(self, p: int) -> int:
        return 2 if kronecker(self.disc, p) == -1 else 1

    def trace_dual(self, x: QuadInt, y: QuadInt) -> Fraction:
        return (x * y).trace()


def make_field(d: int, precision: int = DEFAULT_PREC) -> QuadField:
    return _make_field_cached(d, precision)


@lru_cache(maxsize=None)
def _make_field_cached(d: int, precision: int) -> QuadField:
    return QuadField(d, precision)


def split_prime(fld: QuadField, p: int) -> SplitRecord:
    return fld.split_prime(p)


def totally_positive_generator(fld: QuadField, I) -> QuadInt:
    g = I.gen if isinstance(I, (IdealF, PrimeIdeal)) else I
    return fld.totally_positive_generator(g)


def different_generator(fld: QuadField) -> QuadInt:
    return fld.different_generator()


def residue_ring(fld: QuadField, P: PrimeIdeal) -> "ResidueRing":
    return ResidueRing(fld, P)


# --------------------------------------------------------------------------
# residue rings O_F / P
# --------------------------------------------------------------------------

class ResidueRing:
    """Enumerable residue system of O_F modulo a prime P."""

    MAX_NORM = 10 ** 6

    def __init__(self, fld: QuadField, P: PrimeIdeal):
        if P.norm > self.MAX_NORM:
            raise MemoryError(f"residue ring of norm {P.norm} exceeds the enumeration bound")
        self.fld = fld
        self.P = P
        self.p = P.p
        self.norm = P.norm
        self._pi_conj = P.gen.conj()
        self._pi_norm = P.gen.norm()

    def __len__(self):
        return self.norm

    def elements(self) -> Iterator[QuadInt]:
        p = self.p
        if self.P.kind == "inert":
            for a in range(p):
                for b in range(p):
                    yield self.fld(a, b)
        else:
            for a in range(p):
                yield self.fld(a)

    def units(self) -> Iterator[QuadInt]:
        for x in self.elements():
            if not x.is_zero():
                yield x

    def reduce(self, x: QuadInt) -> QuadInt:
        """Canonical representative of x mod P (x integral or P-integral)."""
        p = self.p
        x = self._make_integral(x)
        if self.P.kind == "inert":
            return self.fld(int(x.a) % p, int(x.b) % p)
        return self.fld((int(x.a) + int(x.b) * self.P.root) % p)

    def _make_integral(self, x: QuadInt) -> QuadInt:
        if x.is_integral():
            return x
        den = math.lcm(x.a.denominator, x.b.denominator)
        if den % self.p == 0:
            raise ValueError("element is not integral at P")
        inv = pow(den, -1, self.p)
        y = x * den
        return y * inv

    def key(self, x: QuadInt) -> tuple[int, int]:
        return self.reduce(x).key()

    def is_zero(self, x: QuadInt) -> bool:
        return self.reduce(x).is_zero()

    def mul(self, x, y):
        return self.reduce(x * y)

    def inverse(self, x: QuadInt) -> QuadInt:
        x = self.reduce(x)
        if x.is_zero():
            raise ZeroDivisionError("zero in residue field")
        # x^(N-2) in the residue field
        r = self.fld.one
        e = self.norm - 2
        base = x
        while e:
            if e & 1:
                r = self.reduce(r * base)
            base = self.reduce(base * base)
            e >>= 1
        return r

    def t(self, h: QuadInt) -> Fraction:
        """Tr(h / pi) mod 1, pi the totally positive generator of P."""
        val = (h * self._pi_conj).trace() / self._pi_norm
        return val - math.floor(val)
