"""Stark units, their logarithms and the Stark regulator matrix.

A unit is stored exactly as a polynomial expression in a root ``alpha`` of the
defining polynomial of its field; embeddings are obtained from the complex roots
of that polynomial at the working precision.

The regulator entries are

    log|u_jk| = sum_{s in G'} (P_k a0(s) P_j^-1)_11 * log|tau((sigma_k s sigma_j^-1)^-1 eps)|

for a Minkowski unit eps given through its Galois orbit of log-absolute-values
(``MinkowskiData``), or are read off an explicit table of units.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import mpmath
import numpy as np
from sympy import Poly, resultant, symbols

from .bignum import DEFAULT_PREC, PrecComplex, PrecReal
from .galois import ArtinRep, CycInt, GroupElement, adjoint_action_matrix

__all__ = [
    "UnitVector", "MinkowskiData", "RegulatorData", "SingularRegulator", "log_abs",
    "stark_unit_matrix", "base_change_units", "search_norm_one_units",
    "predicted_combinations", "parse_unit_file", "parse_logorbit_file", "d5_unit_log",
    "d5_unit_coefficients", "fundamental_unit_from_search", "regulator_from_matrix",
    "galois_root_labels",
]

_X = symbols("x")


class SingularRegulator(ArithmeticError):
    pass


# --------------------------------------------------------------------------
# units
# --------------------------------------------------------------------------

def _poly_roots(poly: tuple[int, ...], prec: int) -> list[mpmath.mpc]:
    with mpmath.workprec(prec + 32):
        roots = mpmath.polyroots(list(poly), maxsteps=200, extraprec=2 * prec)
        tol = mpmath.mpf(2) ** (-(prec // 2))
        real = sorted(+r.real for r in roots if abs(mpmath.im(r)) < tol)
        cplx = sorted((r for r in roots if mpmath.im(r) >= tol), key=lambda r: (r.real, r.imag))
        out = [mpmath.mpc(r) for r in real]
        for r in cplx:
            out += [r, mpmath.conj(r)]
    return out


@dataclass(frozen=True)
class UnitVector:
    """The algebraic number expr(alpha), P(alpha) = 0.

    ``poly`` and ``expr`` list coefficients leading-first.  Embeddings follow
    the root order: real roots ascending, then complex roots of positive
    imaginary part each followed by its conjugate.
    """

    poly: tuple[int, ...]
    expr: tuple[Fraction, ...]
    prec: int = DEFAULT_PREC
    check: bool = True
    _emb: list = field(default_factory=list, compare=False, repr=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "poly", tuple(int(c) for c in self.poly))
        object.__setattr__(self, "expr", tuple(Fraction(c) for c in self.expr))
        if self.check and abs(self.norm()) != 1:
            raise ValueError(f"{self.describe()} is not a unit (norm {self.norm()})")

    @classmethod
    def one(cls, poly, prec: int = DEFAULT_PREC) -> "UnitVector":
        return cls(tuple(poly), (1,), prec)

    def describe(self) -> str:
        terms = []
        n = len(self.expr) - 1
        for i, c in enumerate(self.expr):
            if c:
                e = n - i
                mon = "" if e == 0 else ("a" if e == 1 else f"a^{e}")
                coef = "" if (c == 1 and mon) else ("-" if (c == -1 and mon) else str(c))
                terms.append(f"{coef}{mon}")
        return " + ".join(terms).replace("+ -", "- ") or "0"

    def norm(self) -> Fraction:
        """Exact N_{K/Q}: Res(P, g) / lc(P)^deg g."""
        P = Poly(list(self.poly), _X)
        den = math.lcm(*(c.denominator for c in self.expr)) if self.expr else 1
        g = Poly([int(c * den) for c in self.expr], _X)
        r = Fraction(int(resultant(P, g, _X)))
        n = P.degree()
        lc = self.poly[0]
        return r / Fraction(lc) ** g.degree() / Fraction(den) ** n

    def embeddings(self, prec: int | None = None) -> list[PrecComplex]:
        prec = prec or self.prec
        for p, vals in self._emb:
            if p == prec:
                return vals
        roots = _poly_roots(self.poly, prec)
        vals = []
        with mpmath.workprec(prec + 16):
            for r in roots:
                v = mpmath.mpc(0)
                for c in self.expr:
                    v = v * r + mpmath.mpf(c.numerator) / c.denominator
                vals.append(PrecComplex.make(v, prec))
        self._emb.append((prec, vals))
        return vals

    def real_embedding_index(self) -> int:
        roots = _poly_roots(self.poly, 64)
        for i, r in enumerate(roots):
            if mpmath.im(r) == 0:
                return i
        raise ValueError("field has no real embedding")

    def log_abs(self, j: int | None = None, prec: int | None = None) -> PrecReal:
        prec = prec or self.prec
        if j is None:
            j = self.real_embedding_index()
        z = self.embeddings(prec)[j]
        a = abs(z)
        if a.value == 0:
            raise ArithmeticError("zero embedding of a unit")
        return a.log()

    def __mul__(self, o: "UnitVector") -> "UnitVector":
        return UnitVector(self.poly, _polymulmod(self.expr, o.expr, self.poly), self.prec)

    def __pow__(self, e: int) -> "UnitVector":
        if e < 0:
            return self.inverse() ** (-e)
        r = UnitVector.one(self.poly, self.prec)
        for _ in range(e):
            r = r * self
        return r

    def inverse(self) -> "UnitVector":
        # solve g * h = 1 mod P through the multiplication matrix
        M = _mult_matrix(self.expr, self.poly)
        n = len(self.poly) - 1
        import sympy
        sol = sympy.Matrix(M).LUsolve(sympy.Matrix([1] + [0] * (n - 1)))
        low_first = [Fraction(int(x.p), int(x.q)) for x in sol]
        return UnitVector(self.poly, tuple(reversed(low_first)), self.prec)

    def coords(self) -> tuple[Fraction, ...]:
        """Power-basis coordinates 1, alpha, ..., alpha^(n-1) after reduction mod P."""
        return tuple(reversed(_reduce_mod(self.expr, self.poly)))


def _reduce_mod(expr: Sequence[Fraction], poly: Sequence[int]) -> tuple[Fraction, ...]:
    """Leading-first remainder of expr mod poly, padded to length deg P."""
    n = len(poly) - 1
    r = list(Fraction(c) for c in expr)
    lc = Fraction(poly[0])
    while len(r) > n:
        q = r[0] / lc
        for i in range(len(poly)):
            r[i] -= q * poly[i]
        r.pop(0)
    return tuple([Fraction(0)] * (n - len(r)) + r)


def _polymulmod(a, b, poly):
    prod = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            prod[i + j] += x * y
    return _reduce_mod(prod, poly)


def _mult_matrix(expr, poly) -> list[list[Fraction]]:
    """Matrix of multiplication by expr on the basis 1, alpha, ... (columns are images)."""
    n = len(poly) - 1
    cols = []
    for k in range(n):
        basis = [1] + [0] * k  # alpha^k leading-first
        img = _polymulmod(list(expr), basis, poly)
        cols.append(list(reversed(img)))
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def log_abs(u: UnitVector, j: int | None = None, prec: int | None = None,
            scalar: CycInt | None = None) -> PrecReal:
    """log|tau_j(u)|, optionally times iota(scalar) for scalar in E real under iota."""
    v = u.log_abs(j, prec)
    if scalar is not None:
        v = v * scalar.real(v.prec)
    return v


def _norm_int(coords: Sequence[int], M_basis) -> int:
    M = sum(c * B for c, B in zip(coords, M_basis))
    return int(round(np.linalg.det(M)))


def search_norm_one_units(poly: Sequence[int], H: int = 5, prec: int = DEFAULT_PREC,
                          norm_one_only: bool = False) -> list[UnitVector]:
    """Units a + b alpha + c alpha^2 (|coords| <= H) of a cubic field, norm +-1.

    Ordered by |log| at the real embedding (smallest first); the first positive
    entry with positive real log is a fundamental unit when H is large enough.
    """
    poly = tuple(int(c) for c in poly)
    n = len(poly) - 1
    Ms = [np.array(_mult_matrix([1] + [0] * k, poly), dtype=float) for k in range(n)]
    found = []
    rng = range(-H, H + 1)
    for coords in itertools.product(rng, repeat=n):
        if not any(coords):
            continue
        approx = _norm_int(coords, Ms)
        if abs(approx) != 1:
            continue
        expr = tuple(reversed(coords))
        u = UnitVector(poly, expr, prec, check=False)
        N = u.norm()
        if abs(N) != 1 or (norm_one_only and N != 1):
            continue
        found.append(u)
    found.sort(key=lambda u: (abs(float(u.log_abs().value)), u.coords()))
    return found


def fundamental_unit_from_search(poly: Sequence[int], H: int = 5,
                                 prec: int = DEFAULT_PREC) -> UnitVector | None:
    """Smallest real-log unit > 1 at the real embedding (signature [1,1] fields)."""
    j = None
    for u in search_norm_one_units(poly, H, prec):
        j = u.real_embedding_index() if j is None else j
        if u.log_abs(j).value > 1e-20 and u.embeddings()[j].re.value > 0:
            return u
    return None


# --------------------------------------------------------------------------
# Minkowski logs and regulators
# --------------------------------------------------------------------------

def galois_root_labels(rep: ArtinRep, prec: int = 128) -> list[int]:
    """Indices into the root order of ``rep.poly`` matching the group's root labels.

    A labelling qualifies when c0 acts as complex conjugation and the G-average
    of lc^3 theta_0 theta_1^2 is a rational integer.  For D5 the labellings by r
    and by r^2 both qualify (the outer automorphism); the first in
    lexicographic order is returned, which fixes the embedding of Q(sqrt 5).
    """
    if rep.poly is None:
        raise ValueError(f"{rep.name} has no defining polynomial")
    roots = _poly_roots(rep.poly, prec)
    n = len(roots)
    npts = len(rep.identity.perm)
    if npts != n:
        raise ValueError(f"{rep.name} permutes {npts} points but its polynomial has {n} roots")
    lc = rep.poly[0]
    tol = mpmath.mpf(2) ** (-(prec // 2))
    c0 = rep.c0.perm
    with mpmath.workprec(prec + 16):
        for lab in itertools.permutations(range(n)):
            th = [roots[j] * lc for j in lab]
            if any(abs(th[c0[i]] - mpmath.conj(th[i])) > tol for i in range(n)):
                continue
            inv = sum(th[g.perm[0]] * th[g.perm[1]] ** 2 for g in rep)
            if abs(mpmath.im(inv)) < tol and abs(inv.real - mpmath.nint(inv.real)) < tol * abs(inv):
                return list(lab)
    raise ValueError(f"no labelling of the roots of {rep.poly} is compatible with {rep.name}")


@dataclass(frozen=True)
class MinkowskiData:
    """The function g -> log|tau(g eps)| on the Galois group (keyed by permutation)."""

    rep: ArtinRep
    logs: dict  # perm tuple -> PrecReal

    def __call__(self, g: GroupElement) -> PrecReal:
        return self.logs[g.perm]

    @classmethod
    def from_function(cls, rep: ArtinRep, fn) -> "MinkowskiData":
        return cls(rep, {g.perm: fn(g) for g in rep})

    @classmethod
    def from_unit(cls, rep: ArtinRep, u: UnitVector, root_labels: Sequence[int] | None = None,
                  prec: int | None = None) -> "MinkowskiData":
        """Orbit of a unit of the field generated by a root of rep's polynomial.

        The group permutes the roots; g eps is eps evaluated at root g(0).
        ``root_labels`` maps the group's root indices to ``u``'s embedding order
        (default: ``galois_root_labels`` when u lives in rep's field).
        """
        emb = u.embeddings(prec)
        if root_labels is not None:
            labels = list(root_labels)
        elif rep.poly is not None and tuple(rep.poly) == tuple(u.poly):
            labels = galois_root_labels(rep)
        else:
            labels = list(range(len(emb)))
        return cls(rep, {g.perm: abs(emb[labels[g.perm[0]]]).log() for g in rep})

    @classmethod
    def from_names(cls, rep: ArtinRep, values: dict) -> "MinkowskiData":
        """Values keyed by element words; c0-translates g c0 ... are filled by symmetry."""
        logs = {}
        for nm, v in values.items():
            g = rep.element(nm)
            logs[g.perm] = v
            logs[rep.mul(rep.c0, g).perm] = v
        missing = [g for g in rep if g.perm not in logs]
        if missing:
            raise ValueError(f"log orbit incomplete: missing {missing}")
        return cls(rep, logs)

    def relation_residual(self) -> PrecReal:
        """sum over G / <c0> of log|tau(g eps)|, i.e. log|N(eps)| = 0 for a unit."""
        seen = set()
        tot = None
        for g in self.rep:
            if g.perm in seen:
                continue
            seen.add(g.perm)
            seen.add(self.rep.mul(self.rep.c0, g).perm)
            v = self(g)
            tot = v if tot is None else tot + v
        return tot


@dataclass
class RegulatorData:
    R: list  # d x d PrecReal
    detR: PrecReal
    A: list
    condition: float
    units: list | None = None

    @property
    def d(self) -> int:
        return len(self.R)

    def floats(self) -> np.ndarray:
        return np.array([[float(x) for x in r] for r in self.R])

    def row_sums(self) -> list[PrecReal]:
        return [sum(r[1:], r[0]) for r in self.R]

    def identity_residual(self) -> float:
        d = self.d
        worst = 0.0
        for i in range(d):
            for j in range(d):
                s = sum((self.R[i][k] * self.A[k][j] for k in range(1, d)), self.R[i][0] * self.A[0][j])
                worst = max(worst, abs(float(s.value) - (1.0 if i == j else 0.0)))
        return worst


def _solve(R: list) -> tuple[PrecReal, list, float]:
    """Determinant and inverse by Gaussian elimination with partial pivoting."""
    d = len(R)
    a = [list(r) + [PrecReal.make(int(i == j), r[0].prec) for j in range(d)] for i, r in enumerate(R)]
    det = PrecReal.make(1, R[0][0].prec)
    for c in range(d):
        piv = max(range(c, d), key=lambda i: abs(a[i][c].value))
        if a[piv][c].value == 0:
            return PrecReal.make(0, R[0][0].prec), [], math.inf
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det = det * a[c][c]
        pv = a[c][c]
        a[c] = [x / pv for x in a[c]]
        for i in range(d):
            if i != c and a[i][c].value != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    inv = [r[d:] for r in a]
    Rf = np.array([[float(x) for x in r] for r in R])
    cond = float(np.linalg.cond(Rf)) if d else 1.0
    return det, inv, cond


def regulator_from_matrix(R: list, units=None) -> RegulatorData:
    det, inv, cond = _solve(R)
    if abs(det.value) <= 1000 * det.err or not inv:
        raise SingularRegulator(f"|det R| = {mpmath.nstr(abs(det.value), 5)} is below "
                                f"1000 * errbound = {mpmath.nstr(1000 * det.err, 5)}")
    return RegulatorData(R, det, inv, cond, units)


def stark_unit_matrix(rep: ArtinRep, data, subgroup: Sequence[GroupElement] | None = None,
                      sigmas: Sequence[GroupElement] | None = None) -> RegulatorData:
    """R_f from a Minkowski orbit (or an explicit d x d table of UnitVectors).

    ``subgroup`` is G' = Gal(L/F) (default: all of G) and ``sigmas`` the coset
    representatives sigma_1, ..., sigma_d of G/G' (default: the identity).
    """
    if not isinstance(data, MinkowskiData):
        table = [list(r) for r in data]
        R = [[u.log_abs() if isinstance(u, UnitVector) else PrecReal.make(u) for u in row]
             for row in table]
        return regulator_from_matrix(R, table)
    Gp = list(subgroup) if subgroup is not None else list(rep)
    sig = list(sigmas) if sigmas is not None else [rep.identity]
    d = len(sig)
    R = [[None] * d for _ in range(d)]
    for j, sj in enumerate(sig):
        for k, sk in enumerate(sig):
            tot = None
            sj_inv = rep.inverse(sj)
            for s in Gp:
                coef = adjoint_action_matrix(rep, s, sj, sk)[0][0]
                if coef.is_zero():
                    continue
                g = rep.inverse(rep.mul(rep.mul(sk, s), sj_inv))
                term = data(g) * coef.real(data(g).prec)
                tot = term if tot is None else tot + term
            R[j][k] = tot if tot is not None else PrecReal.make(0)
    return regulator_from_matrix(R)


def base_change_units(u_f0, u_f0_F) -> RegulatorData:
    """R_f for a base change to a real quadratic field.

    R_f = (1 -1; 1 1) diag(log|u_f0|, log|u_f0^F|) (1 -1; 1 1)^-1
        = 1/2 (a+b, a-b; a-b, a+b).

    Arguments may be UnitVectors (real-embedding log) or log values.
    """
    a = u_f0.log_abs() if isinstance(u_f0, UnitVector) else PrecReal.make(u_f0)
    b = u_f0_F.log_abs() if isinstance(u_f0_F, UnitVector) else PrecReal.make(u_f0_F)
    half = Fraction(1, 2)
    R = [[(a + b) * half, (a - b) * half], [(a - b) * half, (a + b) * half]]
    return regulator_from_matrix(R)


def predicted_combinations(reg: RegulatorData, j: int) -> dict:
    """The rows of the j-th exterior power of A = R^-1, keyed by index subsets.

    For j = d this is the single scalar 1/det R.
    """
    d = reg.d
    if not 1 <= j <= d:
        raise ValueError("degree must satisfy 1 <= j <= d")
    if j == d:
        return {(tuple(range(d)), tuple(range(d))): 1 / reg.detR}
    subsets = list(itertools.combinations(range(d), j))
    out = {}
    for I in subsets:
        for J in subsets:
            minor = [[reg.A[r][c] for c in J] for r in I]
            out[(I, J)] = _det(minor)
    return out


def _det(m: list) -> PrecReal:
    if len(m) == 1:
        return m[0][0]
    tot = None
    for c in range(len(m)):
        sub = [r[:c] + r[c + 1:] for r in m[1:]]
        t = m[0][c] * _det(sub)
        if c % 2:
            t = -t
        tot = t if tot is None else tot + t
    return tot


# --------------------------------------------------------------------------
# the level 47 (D5) unit
# --------------------------------------------------------------------------

def d5_unit_coefficients() -> list[CycInt]:
    """zeta^(2i) + zeta^(-2i), i = 0..4, the exponents of eps^(r^-i)."""
    return [CycInt.zeta(2 * i) + CycInt.zeta(-2 * i) for i in range(5)]


def d5_unit_log(rep: ArtinRep, mink: MinkowskiData) -> PrecReal:
    """log|u| = sum_i iota(zeta^(2i) + zeta^(-2i)) * log|tau(r^-i eps)|."""
    r = rep.element("r")
    tot = None
    for i, c in enumerate(d5_unit_coefficients()):
        g = rep.inverse(rep.power(r, i))
        t = mink(g) * c.real(mink(g).prec)
        tot = t if tot is None else tot + t
    return tot


# --------------------------------------------------------------------------
# files
# --------------------------------------------------------------------------

def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(x) for x in s.split(","))


def parse_unit_file(path, prec: int = DEFAULT_PREC) -> list[UnitVector]:
    """``unit <poly coeffs> <expr coeffs>`` records, comma-separated, leading first."""
    out = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tag, *rest = line.split()
        if tag != "unit" or len(rest) != 2:
            raise ValueError(f"bad unit record: {raw!r}")
        out.append(UnitVector(_ints(rest[0]), tuple(Fraction(x) for x in rest[1].split(",")), prec))
    return out


def parse_logorbit_file(path, rep: ArtinRep) -> MinkowskiData:
    """``logorbit <element> <decimal>`` records after a ``precision <digits>`` header."""
    digits = None
    vals = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tag, *rest = line.split()
        if tag == "precision":
            digits = int(rest[0])
        elif tag == "logorbit":
            if digits is None:
                raise ValueError("logorbit file needs a 'precision <digits>' header first")
            bits = int(digits * 3.33) + 8
            vals[rest[0]] = PrecReal.make(rest[1], bits,
                                          err=mpmath.mpf(10) ** (-digits))
        else:
            raise ValueError(f"unknown record {tag!r}")
    return MinkowskiData.from_names(rep, vals)
