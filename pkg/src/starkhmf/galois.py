"""Finite Galois groups, Artin representations over Z[zeta_m] and Frobenius lookup.

Groups are realised concretely as permutation groups on the complex roots of a
defining polynomial, each element carrying its representation matrix.  A small
catalog covers the odd dihedral representations used by the pipeline:

* ``S3reg``      -- the 2-dimensional representation of S3 (cubic fields),
* ``S3xS3``      -- sgn (x) reg on S3 x S3,
* ``D5``         -- the level 47 representation with image in GL2(Z[zeta_5]),
* ``S3reg_bc``   -- S3reg inflated to S3 x C2, the Galois group of L F / Q for a
  real quadratic F disjoint from L (used for base change regulators).

Frobenius classes come from the factorization pattern of the defining
polynomial mod p.  When the pattern does not pin down a class (the two classes of
5-cycles in D5) a binary-quadratic-form refiner decides via the class group of
the quadratic resolvent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Sequence

import mpmath
from sympy import Poly, symbols, discriminant, factor_list

from .bignum import DEFAULT_PREC, PrecComplex, PrecReal

__all__ = [
    "CycInt", "ArtinRep", "GroupElement", "FrobeniusClass", "RAMIFIED",
    "AmbiguousFrobenius", "BinaryFormRefiner", "catalog", "frobenius_class",
    "trace_of_frobenius", "adjoint_matrix", "adjoint_action_matrix", "parse_rep_file",
    "s3_regular", "s3_regular_bc", "s3xs3_sgn_reg", "d5_level47", "mat", "matmul", "identity",
    "det", "trace",
]

_X = symbols("x")


# --------------------------------------------------------------------------
# cyclotomic numbers
# --------------------------------------------------------------------------

def _phi(m: int) -> int:
    return {1: 1, 5: 4}[m]


class CycInt:
    """Element of Q(zeta_m), m in {1, 5}, in the power basis 1, zeta, ..., zeta^(phi(m)-1).

    Coefficients are Fractions: the adjoint matrices in the standard trace-zero
    basis have half-integral entries.
    """

    __slots__ = ("m", "c")

    def __init__(self, coeffs, m: int = 1):
        if m not in (1, 5):
            raise ValueError("only m = 1 and m = 5 are supported")
        if not isinstance(coeffs, (list, tuple)):
            coeffs = [coeffs]
        coeffs = [x if isinstance(x, Fraction) else Fraction(int(x)) if not isinstance(x, str)
                  else Fraction(x) for x in coeffs]
        n = _phi(m)
        if len(coeffs) > n:
            # arbitrary length: reduce with zeta^m = 1 and Phi_m(zeta) = 0
            coeffs = _reduce_powers(coeffs, m)
        coeffs = coeffs + [Fraction(0)] * (n - len(coeffs))
        self.m = m
        self.c = tuple(coeffs)

    # constructors -------------------------------------------------------
    @classmethod
    def zeta(cls, k: int = 1, m: int = 5) -> "CycInt":
        k %= m
        v = [0] * m
        v[k] = 1
        return cls(v, m)

    @classmethod
    def from_sqrt5(cls, a, b) -> "CycInt":
        """a + b*sqrt(5) with sqrt(5) = 1 + 2(zeta + zeta^4)."""
        a, b = Fraction(a), Fraction(b)
        s5 = [-1, 0, -2, -2]
        return cls([a + b * s5[0], b * s5[1], b * s5[2], b * s5[3]], 5)

    # coercion -----------------------------------------------------------
    def _lift(self, m: int) -> "CycInt":
        if m == self.m:
            return self
        return CycInt(list(self.c), m)

    def _co(self, o) -> tuple["CycInt", "CycInt"]:
        if not isinstance(o, CycInt):
            o = CycInt(o, 1)
        m = max(self.m, o.m)
        return self._lift(m), o._lift(m)

    # ring operations ----------------------------------------------------
    def __add__(self, o):
        a, b = self._co(o)
        return CycInt([x + y for x, y in zip(a.c, b.c)], a.m)

    __radd__ = __add__

    def __neg__(self):
        return CycInt([-x for x in self.c], self.m)

    def __sub__(self, o):
        return self + (-self._co(o)[1])

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        a, b = self._co(o)
        if a.m == 1:
            return CycInt(a.c[0] * b.c[0], 1)
        prod = [Fraction(0)] * 7
        for i, x in enumerate(a.c):
            if x:
                for j, y in enumerate(b.c):
                    prod[i + j] += x * y
        return CycInt(prod, a.m)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, (int, Fraction)):
            return CycInt([x / Fraction(o) for x in self.c], self.m)
        return self * CycInt._co(self, o)[1].inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        r = CycInt(1, self.m)
        b = self
        while e:
            if e & 1:
                r = r * b
            b = b * b
            e >>= 1
        return r

    def galois(self, k: int) -> "CycInt":
        """Image under zeta -> zeta^k (k a unit mod m)."""
        if self.m == 1:
            return self
        v = [Fraction(0)] * 5
        for i, x in enumerate(self.c):
            v[(i * k) % 5] += x
        return CycInt(v, 5)

    def conj(self) -> "CycInt":
        return self.galois(-1)

    def norm(self) -> Fraction:
        if self.m == 1:
            return self.c[0]
        r = self
        for k in (2, 3, 4):
            r = r * self.galois(k)
        assert r.is_rational()
        return r.c[0]

    def inverse(self) -> "CycInt":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero in Q(zeta_m)")
        if self.m == 1:
            return CycInt(1 / self.c[0], 1)
        others = self.galois(2) * self.galois(3) * self.galois(4)
        return others / self.norm()

    # predicates ---------------------------------------------------------
    def is_zero(self) -> bool:
        return not any(self.c)

    def is_rational(self) -> bool:
        return not any(self.c[1:])

    def is_integral(self) -> bool:
        return all(x.denominator == 1 for x in self.c)

    def __eq__(self, o):
        if isinstance(o, (int, Fraction)):
            o = CycInt(o, 1)
        if not isinstance(o, CycInt):
            return NotImplemented
        a, b = self._co(o)
        return a.c == b.c

    def __hash__(self):
        # rational values hash alike regardless of m
        if self.is_rational():
            return hash(self.c[0])
        return hash(self.c)

    # conversions --------------------------------------------------------
    def to_rational(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return self.c[0]

    def to_sqrt5(self) -> tuple[Fraction, Fraction]:
        """(a, b) with self = a + b sqrt 5; error if self is not in Q(sqrt 5)."""
        if self.m == 1:
            return self.c[0], Fraction(0)
        if self.galois(4) != self:
            raise ValueError(f"{self} does not lie in Q(sqrt 5)")
        s = self.galois(2)
        a = (self + s).to_rational() / 2
        half_diff = (self - s) / 2  # = b sqrt5
        b5 = half_diff * CycInt.from_sqrt5(0, 1)  # = 5 b
        return a, b5.to_rational() / 5

    def value(self, prec: int = DEFAULT_PREC) -> mpmath.mpc:
        with mpmath.workprec(prec + 16):
            if self.m == 1:
                return mpmath.mpc(mpmath.mpf(self.c[0].numerator) / self.c[0].denominator)
            z = mpmath.expjpi(mpmath.mpf(2) / 5)
            s = mpmath.mpc(0)
            for i, x in enumerate(self.c):
                if x:
                    s += (mpmath.mpf(x.numerator) / x.denominator) * z ** i
            return s

    def embed(self, prec: int = DEFAULT_PREC) -> PrecComplex:
        """iota(self) with iota(zeta_5) = exp(2 pi i / 5)."""
        return PrecComplex.make(self.value(prec), prec)

    def __complex__(self):
        return complex(self.value(64))

    def real(self, prec: int = DEFAULT_PREC) -> PrecReal:
        v = self.value(prec)
        return PrecReal.make(v.real, prec, err=abs(v.imag))

    def serialize(self) -> str:
        return ",".join(str(x) for x in self.c)

    @classmethod
    def parse(cls, s: str, m: int | None = None) -> "CycInt":
        parts = [Fraction(x) for x in s.split(",")]
        if m is None:
            m = 1 if len(parts) == 1 else 5
        return cls(parts, m)

    def __repr__(self):
        if self.m == 1:
            return str(self.c[0])
        terms = []
        for i, x in enumerate(self.c):
            if x:
                terms.append(f"{x}" if i == 0 else f"{x}*z^{i}")
        return "(" + (" + ".join(terms) or "0") + ")"


def _reduce_powers(coeffs: list, m: int) -> list[Fraction]:
    if m == 1:
        return [sum(coeffs, Fraction(0))]
    v = [Fraction(0)] * 5
    for i, x in enumerate(coeffs):
        v[i % 5] += x
    # zeta^4 = -(1 + zeta + zeta^2 + zeta^3)
    top = v[4]
    return [v[i] - top for i in range(4)]


# --------------------------------------------------------------------------
# small matrix helpers over CycInt
# --------------------------------------------------------------------------

Matrix = tuple  # tuple of row tuples of CycInt


def mat(rows, m: int = 1) -> Matrix:
    return tuple(tuple(x if isinstance(x, CycInt) else CycInt(x, m) for x in r) for r in rows)


def matmul(a: Matrix, b: Matrix) -> Matrix:
    n, k, p = len(a), len(b), len(b[0])
    return tuple(tuple(sum((a[i][t] * b[t][j] for t in range(k)), CycInt(0)) for j in range(p))
                 for i in range(n))


def identity(n: int) -> Matrix:
    return tuple(tuple(CycInt(int(i == j)) for j in range(n)) for i in range(n))


def det(a: Matrix) -> CycInt:
    n = len(a)
    if n == 1:
        return a[0][0]
    if n == 2:
        return a[0][0] * a[1][1] - a[0][1] * a[1][0]
    total = CycInt(0)
    for j in range(n):
        minor = tuple(tuple(r[c] for c in range(n) if c != j) for r in a[1:])
        term = a[0][j] * det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def trace(a: Matrix) -> CycInt:
    return sum((a[i][i] for i in range(len(a))), CycInt(0))


def _mkey(a: Matrix):
    return tuple(tuple((x.m, x.c) if not x.is_rational() else (1, x.c[:1]) for x in r) for r in a)


# --------------------------------------------------------------------------
# groups with representation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupElement:
    name: str
    perm: tuple[int, ...]
    matrix: Matrix = field(compare=False, hash=False)

    def __repr__(self):
        return self.name


def _compose(p: tuple, q: tuple) -> tuple:
    """p after q."""
    return tuple(p[i] for i in q)


def _cycle_type(perm: tuple, block: Sequence[int]) -> tuple[int, ...]:
    seen = set()
    lengths = []
    for i in block:
        if i in seen:
            continue
        n = 0
        j = i
        while j not in seen:
            seen.add(j)
            j = perm[j]
            n += 1
        lengths.append(n)
    return tuple(sorted(lengths))


class AmbiguousFrobenius(ValueError):
    pass


class _Ramified:
    def __repr__(self):
        return "RAMIFIED"


RAMIFIED = _Ramified()


@dataclass(frozen=True)
class FrobeniusClass:
    rep_name: str
    representative: GroupElement
    size: int


class ArtinRep:
    """A finite group (as permutations of polynomial roots) with a matrix representation.

    ``gens`` maps generator names to ``(perm, matrix)``.  Elements are produced
    by breadth-first closure, named by the shortest generator word (ties broken
    by generator order, so names are reproducible).
    """

    def __init__(self, name: str, gens: dict, m: int = 1, poly: Sequence[int] | None = None,
                 c0: str = "s", blocks: Sequence[Sequence[int]] | None = None,
                 refiner: "BinaryFormRefiner | None" = None, quotient: Iterable[str] = (),
                 block_polys: Sequence[Sequence[int]] | None = None):
        self.name = name
        self.m = m
        self.poly = tuple(poly) if poly is not None else None
        self.refiner = refiner
        self.block_polys = [tuple(b) for b in block_polys] if block_polys else None
        if self.poly is None and self.block_polys:
            self.poly = tuple(int(c) for c in
                              Poly(math.prod(Poly(list(b), _X).as_expr() for b in self.block_polys),
                                   _X).all_coeffs())
        gen_list = [(g, tuple(p), mat(M, m)) for g, (p, M) in gens.items()]
        self.dim = len(gen_list[0][2])
        npts = len(gen_list[0][1])
        self.blocks = [list(b) for b in blocks] if blocks else [list(range(npts))]
        ident = GroupElement("1", tuple(range(npts)), identity(self.dim))
        self.elements: list[GroupElement] = [ident]
        by_perm = {ident.perm: ident}
        frontier = [ident]
        while frontier:
            nxt = []
            for e in frontier:
                for g, p, M in gen_list:
                    perm = _compose(e.perm, p)
                    if perm in by_perm:
                        ex = by_perm[perm]
                        if _mkey(ex.matrix) != _mkey(matmul(e.matrix, M)):
                            raise ValueError(f"{name}: generators do not define a homomorphism")
                        continue
                    nm = g if e.name == "1" else e.name + g
                    el = GroupElement(nm, perm, matmul(e.matrix, M))
                    by_perm[perm] = el
                    self.elements.append(el)
                    nxt.append(el)
            frontier = nxt
        self._by_perm = by_perm
        self._by_name = {e.name: e for e in self.elements}
        self.identity = ident
        self.c0 = self._by_name[c0] if c0 in self._by_name else self.find_word(c0)
        self.quotient_gens = tuple(quotient)
        self._classes = None

    # group structure ----------------------------------------------------
    def __repr__(self):
        return f"ArtinRep({self.name}, |G|={len(self.elements)}, dim={self.dim})"

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def element(self, name: str) -> GroupElement:
        if name in self._by_name:
            return self._by_name[name]
        return self.find_word(name)

    def find_word(self, word: str) -> GroupElement:
        """Evaluate a word like 'r^-2 s' or 'rrs' in the generators."""
        res = self.identity
        tokens = word.replace("*", " ").split()
        if len(tokens) == 1 and "^" not in word and word not in self._by_name:
            tokens = list(word)
        for tok in tokens:
            if tok == "1":
                continue
            if "^" in tok:
                g, e = tok.split("^")
                e = int(e)
            else:
                g, e = tok, 1
            ge = self._by_name[g]
            if e < 0:
                ge = self.inverse(ge)
                e = -e
            for _ in range(e):
                res = self.mul(res, ge)
        return res

    def mul(self, a: GroupElement, b: GroupElement) -> GroupElement:
        return self._by_perm[_compose(a.perm, b.perm)]

    def inverse(self, a: GroupElement) -> GroupElement:
        inv = [0] * len(a.perm)
        for i, j in enumerate(a.perm):
            inv[j] = i
        return self._by_perm[tuple(inv)]

    def conjugate(self, g: GroupElement, h: GroupElement) -> GroupElement:
        """h g h^-1."""
        return self.mul(self.mul(h, g), self.inverse(h))

    def power(self, g: GroupElement, e: int) -> GroupElement:
        r = self.identity
        for _ in range(e):
            r = self.mul(r, g)
        return r

    def rho(self, g: GroupElement) -> Matrix:
        return g.matrix

    def classes(self) -> list[list[GroupElement]]:
        if self._classes is None:
            seen = set()
            out = []
            for g in self.elements:
                if g.perm in seen:
                    continue
                cl = {self.conjugate(g, h).perm for h in self.elements}
                seen |= cl
                out.append([self._by_perm[p] for p in sorted(cl, key=lambda p: self._by_perm[p].name)])
            self._classes = out
        return self._classes

    def class_of(self, g: GroupElement) -> list[GroupElement]:
        for cl in self.classes():
            if any(x.perm == g.perm for x in cl):
                return cl
        raise KeyError(g)

    def is_homomorphism(self) -> bool:
        for a in self.elements:
            for b in self.elements:
                if _mkey(matmul(a.matrix, b.matrix)) != _mkey(self.mul(a, b).matrix):
                    return False
        return True

    def block_type(self, g: GroupElement) -> tuple:
        return tuple(_cycle_type(g.perm, b) for b in self.blocks)

    def subgroup(self, names: Iterable[str]) -> list[GroupElement]:
        """Closure of the listed elements."""
        gens = [self.element(n) for n in names]
        out = {self.identity.perm: self.identity}
        frontier = [self.identity]
        while frontier:
            nxt = []
            for e in frontier:
                for g in gens:
                    h = self.mul(e, g)
                    if h.perm not in out:
                        out[h.perm] = h
                        nxt.append(h)
            frontier = nxt
        return sorted(out.values(), key=lambda e: (len(e.name), e.name))

    # ramification -------------------------------------------------------
    @lru_cache(maxsize=None)
    def bad_primes(self) -> frozenset[int]:
        if self.poly is None:
            return frozenset()
        if getattr(self, "_bad", None) is None:
            self._bad = self._bad_primes()
        return self._bad

    def _bad_primes(self) -> frozenset[int]:
        from sympy import factorint
        D = 1
        for f, _ in factor_list(Poly(list(self.poly), _X))[1]:
            D *= int(discriminant(f, _X))
        return frozenset(factorint(abs(D)))


# --------------------------------------------------------------------------
# binary quadratic forms decide Frobenius in dihedral extensions
# --------------------------------------------------------------------------

def reduce_form(a: int, b: int, c: int) -> tuple[int, int, int]:
    """Reduced representative of a positive definite binary quadratic form."""
    while True:
        if c < a:
            a, b, c = c, -b, a
            continue
        if b > a or b <= -a:
            k = (a - b) // (2 * a)
            # b -> b + 2 a k lands in (-a, a]
            b2 = b + 2 * a * k
            c = (b2 * b2 - (b * b - 4 * a * c)) // (4 * a)
            b = b2
            continue
        if a == c and b < 0:
            b = -b
        return a, b, c


@dataclass(frozen=True)
class BinaryFormRefiner:
    """Map a prime split in Q(sqrt D) (D < 0) to a group element by its form class.

    ``table`` sends reduced forms (a, |b|, c) to element names.  Primes inert
    in Q(sqrt D) are not handled here (their Frobenius has a distinct cycle type).
    """

    disc: int
    table: tuple[tuple[tuple[int, int, int], str], ...]

    def form_of(self, p: int) -> tuple[int, int, int]:
        D = self.disc
        # solve b^2 = D mod 4p with b = D mod 2
        bb = None
        for b in range(0, 2 * p):
            if (b - D) % 2 == 0 and (b * b - D) % (4 * p) == 0:
                bb = b
                break
        if bb is None:
            raise ValueError(f"{p} is not represented by a form of discriminant {D}")
        a, b, c = reduce_form(p, bb, (bb * bb - D) // (4 * p))
        return a, abs(b), c

    def element_name(self, p: int) -> str:
        key = self.form_of(p)
        for k, nm in self.table:
            if k == key:
                return nm
        raise AmbiguousFrobenius(f"no group element recorded for form {key}")


# --------------------------------------------------------------------------
# Frobenius
# --------------------------------------------------------------------------

def _pmod(a: list[int], f: list[int], p: int) -> list[int]:
    """a mod f over F_p; coefficient lists are low degree first, f monic."""
    a = [c % p for c in a]
    df = len(f) - 1
    while len(a) > df:
        c = a.pop()
        if c:
            off = len(a) - df
            for i in range(df):
                a[off + i] = (a[off + i] - c * f[i]) % p
    while a and a[-1] == 0:
        a.pop()
    return a


def _pmulmod(a, b, f, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _pmod(out, f, p)


def _ppowmod(base, e, f, p):
    r = [1]
    while e:
        if e & 1:
            r = _pmulmod(r, base, f, p)
        base = _pmulmod(base, base, f, p)
        e >>= 1
    return r


def _strip(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _pgcd(a, b, p):
    a, b = _strip([c % p for c in a]), _strip([c % p for c in b])
    while b:
        inv = pow(b[-1], -1, p)
        b = [c * inv % p for c in b]
        a = _pmod(a, b, p)
        a, b = b, a
    if a:
        inv = pow(a[-1], -1, p)
        a = [c * inv % p for c in a]
    return a


def _pdiv(a, b, p):
    """Exact quotient a / b over F_p, b monic."""
    a = a[:]
    q = [0] * (len(a) - len(b) + 1)
    for i in range(len(q) - 1, -1, -1):
        c = a[i + len(b) - 1] % p
        q[i] = c
        if c:
            for j, y in enumerate(b):
                a[i + j] = (a[i + j] - c * y) % p
    return q


def _factor_degrees(poly: Sequence[int], p: int) -> tuple[int, ...]:
    """Degrees of the irreducible factors of a squarefree poly mod p (distinct-degree)."""
    f = [int(c) % p for c in reversed(list(poly))]
    while f and f[-1] == 0:
        f.pop()
    inv = pow(f[-1], -1, p)
    f = [c * inv % p for c in f]
    degs: list[int] = []
    x = [0, 1]
    h = x
    i = 0
    while len(f) - 1 >= 2 * (i + 1):
        i += 1
        h = _ppowmod(h, p, f, p)
        g = _pgcd(f, [((h[j] if j < len(h) else 0) - (x[j] if j < 2 else 0)) % p
                      for j in range(max(len(h), 2))], p)
        if len(g) > 1:
            degs += [i] * ((len(g) - 1) // i)
            f = _pdiv(f, g, p)
            h = _pmod(h, f, p)
    if len(f) > 1:
        degs.append(len(f) - 1)
    return tuple(sorted(degs))


def _blocks_polys(rep: ArtinRep) -> list[tuple[int, ...]]:
    """The polynomial whose roots make up each permutation block."""
    if rep.block_polys:
        return list(rep.block_polys)
    return [rep.poly]


def frobenius_class(rep: ArtinRep, p, power: int = 1):
    """Conjugacy class of Frob_p (or of Frob_p^power, e.g. for an inert prime of F).

    ``p`` may be a rational prime or a prime ideal object with attributes ``p``
    and ``norm`` (the residue degree then sets ``power``).  Returns ``RAMIFIED``
    if p divides the discriminant of the defining polynomial.
    """
    if hasattr(p, "norm") and hasattr(p, "p"):
        power = int(round(math.log(p.norm, p.p))) * power
        p = p.p
    if rep.poly is None:
        raise ValueError(f"{rep.name} has no defining polynomial")
    if p in rep.bad_primes():
        return RAMIFIED
    target = tuple(_factor_degrees(fp, p) for fp in _blocks_polys(rep))
    by_type = getattr(rep, "_classes_by_type", None)
    if by_type is None:
        by_type = {}
        for cl in rep.classes():
            by_type.setdefault(rep.block_type(cl[0]), []).append(cl)
        rep._classes_by_type = by_type
    cands = by_type.get(target, [])
    if not cands:
        raise ValueError(f"no class of {rep.name} matches factorization {target} mod {p}")
    if len(cands) > 1:
        if rep.refiner is None:
            raise AmbiguousFrobenius(f"factorization mod {p} does not determine the class")
        g = rep.element(rep.refiner.element_name(p))
        cl = rep.class_of(g)
        if cl not in cands:
            raise AmbiguousFrobenius(f"refiner disagrees with the factorization mod {p}")
        cands = [cl]
    cl = cands[0]
    g = rep.power(cl[0], power)
    return FrobeniusClass(rep.name, g, len(rep.class_of(g)))


def trace_of_frobenius(rep: ArtinRep, p, power: int = 1):
    fc = frobenius_class(rep, p, power)
    if fc is RAMIFIED:
        return RAMIFIED
    return trace(fc.representative.matrix)


# --------------------------------------------------------------------------
# trace-zero adjoint
# --------------------------------------------------------------------------

# basis of trace-zero 2x2 matrices adapted to c0 = (0 1; 1 0):
# m1 = (0 1; 1 0), m2 = (0 1; -1 0), m3 = (1 0; 0 -1)
_AD_BASIS = (((0, 1), (1, 0)), ((0, 1), (-1, 0)), ((1, 0), (0, -1)))


def _ad_coords(X: Matrix) -> tuple[CycInt, CycInt, CycInt]:
    a = (X[0][1] + X[1][0]) / 2
    b = (X[0][1] - X[1][0]) / 2
    return a, b, X[0][0]


def adjoint_matrix(rep: ArtinRep, g: GroupElement) -> Matrix:
    """Matrix of Ad0 rho(g) in the basis m1, m2, m3 (columns are images)."""
    return _adjoint_cached(rep, g.perm)


@lru_cache(maxsize=4096)
def _adjoint_cached(rep: ArtinRep, perm: tuple) -> Matrix:
    g = rep._by_perm[perm]
    R = g.matrix
    Ri = rep.inverse(g).matrix
    cols = []
    for B in _AD_BASIS:
        Bm = mat(B, rep.m)
        cols.append(_ad_coords(matmul(matmul(R, Bm), Ri)))
    return tuple(tuple(cols[j][i] for j in range(3)) for i in range(3))


def adjoint_action_matrix(rep: ArtinRep, g: GroupElement, sigma_j: GroupElement | None = None,
                          sigma_k: GroupElement | None = None) -> Matrix:
    """P_k a0(g) P_j^{-1}, where P_j = a0(sigma_j) moves the c0-adapted basis to c_j."""
    sj = sigma_j or rep.identity
    sk = sigma_k or rep.identity
    Pk = adjoint_matrix(rep, sk)
    Pj_inv = adjoint_matrix(rep, rep.inverse(sj))
    return matmul(matmul(Pk, adjoint_matrix(rep, g)), Pj_inv)


# --------------------------------------------------------------------------
# catalog
# --------------------------------------------------------------------------

S_MAT = ((0, 1), (1, 0))
T_MAT = ((-1, -1), (1, 0))

# reduced forms of discriminant -47 and the class group generator they map to;
# the ideal over 2 of class (2,1,6) has Frobenius r (trace zeta + zeta^-1)
D5_FORMS = BinaryFormRefiner(-47, (((1, 1, 12), "1"), ((2, 1, 6), "r"), ((3, 1, 4), "rr")))
D5_POLY = (1, -1, 1, 1, -2, 1)


def s3_regular(poly: Sequence[int] = (1, -1, 0, 1)) -> ArtinRep:
    # roots: 0 real, 1 and 2 complex conjugate; c0 swaps 1 and 2
    return ArtinRep("S3reg", {"s": ((0, 2, 1), S_MAT), "t": ((1, 2, 0), T_MAT)},
                    poly=poly, c0="s")


def s3_regular_bc() -> ArtinRep:
    """S3reg inflated along S3 x C2 -> S3; the C2 factor is Gal(F/Q).

    Points 0..2 carry the cubic, points 3, 4 the two square roots of d.
    c0 acts on both factors, the quotient generator 'c' only on F.
    """
    return ArtinRep("S3reg_bc", {
        "s": ((0, 2, 1, 4, 3), S_MAT),
        "t": ((1, 2, 0, 3, 4), T_MAT),
        "c": ((0, 1, 2, 4, 3), ((1, 0), (0, 1))),
    }, poly=None, c0="s", blocks=[(0, 1, 2), (3, 4)], quotient=("c",))


def s3xs3_sgn_reg(polys=None) -> ArtinRep:
    """sgn (x) reg on S3 x S3 (two cubic fields, roots 0..2 and 3..5)."""
    one = ((1, 0), (0, 1))
    minus = ((-1, 0), (0, -1))
    return ArtinRep("S3xS3", {
        "a": ((0, 2, 1, 3, 4, 5), minus),
        "b": ((1, 2, 0, 3, 4, 5), one),
        "s": ((0, 2, 1, 3, 5, 4), tuple(tuple(-x for x in r) for r in S_MAT)),
        "t": ((0, 1, 2, 4, 5, 3), T_MAT),
    }, c0="s", blocks=[(0, 1, 2), (3, 4, 5)], block_polys=polys)


def d5_level47() -> ArtinRep:
    z = CycInt.zeta(1)
    z4 = CycInt.zeta(4)
    zero = CycInt(0, 5)
    r_mat = ((z, zero), (zero, z4))
    # roots indexed by Z/5 with 0 the real root; s is i -> -i, r is i -> i + 1
    return ArtinRep("D5", {
        "s": ((0, 4, 3, 2, 1), S_MAT),
        "r": ((1, 2, 3, 4, 0), r_mat),
    }, m=5, poly=D5_POLY, c0="s", refiner=D5_FORMS)


_CATALOG: dict[str, Callable[[], ArtinRep]] = {
    "S3reg": s3_regular,
    "S3reg_bc": s3_regular_bc,
    "S3xS3": s3xs3_sgn_reg,
    "D5": d5_level47,
}


@lru_cache(maxsize=None)
def catalog(name: str, poly: tuple[int, ...] | None = None) -> ArtinRep:
    if name == "S3reg" and poly is not None:
        return s3_regular(poly)
    if name not in _CATALOG:
        raise KeyError(f"unknown representation {name!r}; known: {sorted(_CATALOG)}")
    return _CATALOG[name]()


# --------------------------------------------------------------------------
# text description files
# --------------------------------------------------------------------------

def parse_rep_file(path) -> ArtinRep:
    """Read a representation description.

    Records, one per line (``#`` starts a comment)::

        name <label>
        cyclo <m>                       # 1 (default) or 5
        poly <c_n> ... <c_0>            # defining polynomial, leading coefficient first
        elem <name> <e11> <e12> ... perm=<i0>,<i1>,...
        cc <element name>               # complex conjugation c0
        refine <D> <a>,<b>,<c>:<elem> ...

    Matrix entries are comma-separated coefficient vectors in the power basis of
    Z[zeta_m] (a plain integer for m = 1).  ``perm`` gives the action on the
    roots of the defining polynomial.
    """
    name, m, poly, c0 = Path(path).stem, 1, None, "s"
    elems: dict = {}
    refiner = None
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tag, *rest = line.split()
        if tag == "name":
            name = rest[0]
        elif tag == "cyclo":
            m = int(rest[0])
        elif tag == "poly":
            poly = tuple(int(x) for x in rest)
        elif tag == "cc":
            c0 = rest[0]
        elif tag == "elem":
            en, *entries = rest
            perm = None
            vals = []
            for e in entries:
                if e.startswith("perm="):
                    perm = tuple(int(x) for x in e[5:].split(","))
                else:
                    vals.append(CycInt.parse(e, m))
            n = int(math.isqrt(len(vals)))
            if n * n != len(vals):
                raise ValueError(f"element {en}: {len(vals)} entries is not a square matrix")
            if perm is None:
                raise ValueError(f"element {en}: missing perm=")
            elems[en] = (perm, tuple(tuple(vals[i * n:(i + 1) * n]) for i in range(n)))
        elif tag == "refine":
            D = int(rest[0])
            table = []
            for item in rest[1:]:
                form, nm = item.split(":")
                table.append((tuple(int(x) for x in form.split(",")), nm))
            refiner = BinaryFormRefiner(D, tuple(table))
        else:
            raise ValueError(f"unknown record {tag!r} in {path}")
    if not elems:
        raise ValueError(f"{path}: no elem records")
    return ArtinRep(name, elems, m=m, poly=poly, c0=c0, refiner=refiner)
