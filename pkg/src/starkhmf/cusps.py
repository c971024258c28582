"""Expansions of a newform of square-free level at the other cusps.

For a divisor A | N the Atkin-Lehner type matrix W_A = (A 1; -N mu  A lam),
with 1 = lam A + mu B, sends f to lam_A * f^(A), where f^(A) is the newform
whose eigenvalues are twists of those of f.  The expansion of f at a classical
cusp s of Gamma_0(N) is obtained by writing tau^eps_h = gamma W_A D T with
gamma in Gamma_0(N), D diagonal and T a translation, and reading off how each
factor acts on q-expansions.

Both the rational case (``fld is None``, elements are Fractions) and the real
quadratic case (QuadInt elements) are handled; over Q the unit eps is 1.

``lsq_oracle`` recovers the same coefficients numerically by sampling the
slashed form and solving a least-squares problem.  It is slow but independent
of all the bookkeeping above.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
import numpy as np
from sympy import divisors, factorint

from .bignum import DEFAULT_PREC, PrecComplex, PrecReal, exp_phase
from .galois import CycInt
from .hmf import EigenSystem, SpfSieve
from .quadfield import IdealF, QuadField, QuadInt

log = logging.getLogger(__name__)

__all__ = [
    "UnsupportedLevel", "DegeneratePseudoEigenvalue", "DecompositionFailure",
    "ALMatrix", "TwistedCharacters", "CuspExpansion", "Decomposition", "OracleResult",
    "build_al_matrix", "twisted_eigensystem", "gauss_sum", "pseudo_eigenvalue",
    "classical_cusps", "cusp_widths", "cusp_matrix", "decompose_cusp_matrix",
    "classical_cusp_expansion", "lsq_oracle", "bezout",
]


class UnsupportedLevel(ValueError):
    pass


class DegeneratePseudoEigenvalue(ArithmeticError):
    pass


class DecompositionFailure(RuntimeError):
    pass


# --------------------------------------------------------------------------
# ring helpers: Fractions over Q, QuadInts over F
# --------------------------------------------------------------------------

def _elt(fld, x):
    if fld is None:
        if isinstance(x, QuadInt):
            raise TypeError("quadratic element over Q")
        return Fraction(x)
    return x if isinstance(x, QuadInt) else fld(x)


def _integral(x) -> bool:
    if isinstance(x, QuadInt):
        return x.is_integral()
    return Fraction(x).denominator == 1


def _coords(fld, x) -> tuple[Fraction, Fraction]:
    if fld is None:
        return Fraction(x), Fraction(0)
    return x.a, x.b


def _from_coords(fld, a, b=0):
    return Fraction(a) if fld is None else fld(a, b)


def _trace(fld, x) -> Fraction:
    return Fraction(x) if fld is None else x.trace()


def _norm(fld, x) -> Fraction:
    return Fraction(x) if fld is None else x.norm()


def _is_rational(x) -> bool:
    return not isinstance(x, QuadInt) or x.is_rational()


def _as_int(x) -> int:
    if isinstance(x, QuadInt):
        if not x.is_rational():
            raise ValueError(f"{x} is not rational")
        x = x.a
    x = Fraction(x)
    if x.denominator != 1:
        raise ValueError(f"{x} is not an integer")
    return int(x.numerator)


def _int_solve(cols: Sequence[tuple[int, int]], target: tuple[int, int]) -> list[int] | None:
    """Integer c with sum c_i cols_i = target, by column-style Hermite reduction."""
    n = len(cols)
    work = [list(c) for c in cols]
    U = [[int(i == j) for j in range(n)] for i in range(n)]  # columns of U track the ops

    def colop(dst, src, q):  # col_dst -= q * col_src
        for r in range(2):
            work[dst][r] -= q * work[src][r]
        for r in range(n):
            U[r][dst] -= q * U[r][src]

    pivots = []
    free = list(range(n))
    for row in range(2):
        while True:
            nz = [j for j in free if work[j][row] != 0]
            if len(nz) <= 1:
                break
            j0 = min(nz, key=lambda j: abs(work[j][row]))
            for j in nz:
                if j != j0:
                    colop(j, j0, work[j][row] // work[j0][row])
        nz = [j for j in free if work[j][row] != 0]
        if nz:
            pivots.append((row, nz[0]))
            free.remove(nz[0])
    y = {}
    rest = list(target)
    for row, j in pivots:
        g = work[j][row]
        if rest[row] % g:
            return None
        y[j] = rest[row] // g
        for r in range(2):
            rest[r] -= y[j] * work[j][r]
    if any(rest):
        return None
    return [sum(U[r][j] * y[j] for j in y) for r in range(n)]


def bezout(fld, A, B):
    """(lam, mu) in O_F with lam*A + mu*B = 1; rational when A, B are rational integers."""
    if fld is None or (_is_rational(A) and _is_rational(B)):
        a, b = _as_int(A), _as_int(B)
        g, x, y = _egcd(a, b)
        if abs(g) != 1:
            raise ValueError(f"({a}) and ({b}) are not coprime")
        return _elt(fld, x * g), _elt(fld, y * g)
    A, B = _elt(fld, A), _elt(fld, B)
    w = fld.omega
    cols = []
    for x in (A, A * w, B, B * w):
        a, b = _coords(fld, x)
        cols.append((int(a), int(b)))
    c = _int_solve(cols, (1, 0))
    if c is None:
        raise ValueError(f"{A} and {B} generate a proper ideal")
    lam = fld(c[0], c[1])
    mu = fld(c[2], c[3])
    assert lam * A + mu * B == fld.one
    return lam, mu


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def _inverse_mod(fld, m, N):
    lam, _ = bezout(fld, m, N)
    return lam


def _tp_generator(fld, x):
    if fld is None:
        return abs(Fraction(x))
    return fld.totally_positive_generator(_elt(fld, x))


def _primes_of(fld, x) -> list[tuple[object, int]]:
    """Prime factorization of (x): ints over Q, PrimeIdeals over F."""
    if fld is None:
        return sorted(factorint(_as_int(abs(Fraction(x)))).items())
    return fld.factor(_elt(fld, x))


def _prime_gen(fld, P):
    return Fraction(P) if fld is None else P.gen


def _prime_norm(P) -> int:
    return P if isinstance(P, int) else P.norm


def _different(fld):
    return Fraction(1) if fld is None else fld.different_generator()


# 2x2 matrices ---------------------------------------------------------------

def _mm(a, b):
    return ((a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]),
            (a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]))


def _mdet(a):
    return a[0][0] * a[1][1] - a[0][1] * a[1][0]


def _minv(a):
    dt = _mdet(a)
    return ((a[1][1] / dt, -a[0][1] / dt), (-a[1][0] / dt, a[0][0] / dt))


def _mconv(fld, a):
    return tuple(tuple(_elt(fld, x) for x in row) for row in a)


# --------------------------------------------------------------------------
# W_A
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ALMatrix:
    """W_A = (A*alpha beta; N*gamma A*delta) with alpha = beta = 1, det W_A = A."""

    fld: QuadField | None
    N: object
    A: object
    B: object
    lam: object   # delta entry
    mu: object    # gamma = -mu
    trivial: bool = False

    @property
    def alpha(self):
        return _elt(self.fld, 1)

    @property
    def beta(self):
        return _elt(self.fld, 0 if self.trivial else 1)

    @property
    def gamma(self):
        return -self.mu

    @property
    def delta(self):
        return self.lam

    @property
    def matrix(self):
        if self.trivial:
            one, zero = _elt(self.fld, 1), _elt(self.fld, 0)
            return ((one, zero), (zero, one))
        return ((self.A * self.alpha, self.beta), (self.N * self.gamma, self.A * self.delta))

    @property
    def det(self):
        return _mdet(self.matrix)

    @property
    def ideal_A(self):
        return IdealF(self.A, abs(int(_norm(self.fld, self.A)))) if self.fld else self.A

    @property
    def ideal_B(self):
        return IdealF(self.B, abs(int(_norm(self.fld, self.B)))) if self.fld else self.B

    def check(self) -> bool:
        return self.det == self.A and all(_integral(x) for row in self.matrix for x in row)


def _check_squarefree(fld, N):
    fac = _primes_of(fld, N)
    if any(e > 1 for _, e in fac):
        raise UnsupportedLevel(f"level {N} is not square-free; only lsq_oracle applies")
    return fac


def build_al_matrix(fld, N, A) -> ALMatrix:
    """W_A for A | N (generators or IdealF), via 1 = lam*A + mu*B."""
    N = _tp_generator(fld, N.gen if isinstance(N, IdealF) else N)
    A = _tp_generator(fld, A.gen if isinstance(A, IdealF) else A)
    _check_squarefree(fld, N)
    B = N / A
    if not _integral(B):
        raise ValueError(f"{A} does not divide {N}")
    B = _tp_generator(fld, B)
    # keep N = A*B on the nose
    N = A * B
    if abs(_norm(fld, A)) == 1:
        one = _elt(fld, 1)
        return ALMatrix(fld, N, one, B, one, _elt(fld, 0), trivial=True)
    if abs(_norm(fld, B)) == 1:
        # Fricke case: lam = 0, mu = 1
        one = _elt(fld, 1)
        W = ALMatrix(fld, N, A, one, _elt(fld, 0), one)
    else:
        lam, mu = bezout(fld, A, B)
        W = ALMatrix(fld, N, A, B, lam, mu)
    assert W.check(), W
    return W


# --------------------------------------------------------------------------
# twisted characters and eigenvalues
# --------------------------------------------------------------------------

def _cyc(v) -> CycInt:
    return v if isinstance(v, CycInt) else CycInt(v)


class TwistedCharacters:
    """chi_A on (O/A)^x, chi_B on (O/B)^x and the nebentypus ^A chi of f^(A)."""

    def __init__(self, chi: Callable, W: ALMatrix):
        self.chi = chi
        self.W = W
        self.fld = W.fld
        self._tw: dict = {}

    def _chi(self, x) -> CycInt:
        if self.fld is None:
            return _cyc(self.chi(_as_int(x)))
        return _cyc(self.chi(x))

    def chi_A(self, m) -> CycInt:
        """m -> chi((-B beta gamma) m + A alpha delta)."""
        W = self.W
        m = _elt(self.fld, m)
        return self._chi(W.B * W.mu * m + W.A * W.lam)

    def chi_B(self, m) -> CycInt:
        """m -> chi((A alpha delta) m - B beta gamma)."""
        W = self.W
        m = _elt(self.fld, m)
        return self._chi(W.A * W.lam * m + W.B * W.mu)

    def twisted(self, m) -> CycInt:
        """m -> chi((A alpha delta) m - (B beta gamma) m^-1); zero off (O/N)^x."""
        W = self.W
        m = _elt(self.fld, m)
        key = m.key() if isinstance(m, QuadInt) else m
        v = self._tw.get(key)
        if v is None:
            try:
                minv = _inverse_mod(self.fld, m, W.N)
            except ValueError:
                v = CycInt(0)
            else:
                v = self._chi(W.A * W.lam * m + W.B * W.mu * minv)
            self._tw[key] = v
        return v


def twisted_eigensystem(sys: EigenSystem, W: ALMatrix) -> tuple[EigenSystem, TwistedCharacters]:
    """The normalized newform f^(A) together with the characters defining it."""
    chars = TwistedCharacters(sys.nebentypus, W)
    fld = sys.fld
    if W.trivial:
        return sys, chars

    def divides(g, P) -> bool:
        if fld is None:
            return _as_int(g) % P == 0
        return fld.valuation(g, P) > 0

    def ap(P) -> CycInt:
        a = sys.a_prime(P)
        pi = _prime_gen(fld, P)
        if not divides(W.A, P):
            return chars.chi_A(pi).conj() * a
        return chars.chi_B(pi) * a.conj()

    def neb(x) -> CycInt:
        return chars.twisted(x)

    rational = all(_is_rational(x) for x in (W.A, W.B, W.lam, W.mu))
    tw = EigenSystem(fld, sys.level, sys.weight, ap, neb, label=f"{sys.label}^({W.A})",
                     source=f"twist:{sys.source}", symmetric=sys.symmetric and rational,
                     parent=sys)
    return tw, chars


# --------------------------------------------------------------------------
# pseudo-eigenvalue
# --------------------------------------------------------------------------

def _residues(fld, P):
    if fld is None:
        for h in range(P):
            yield Fraction(h), Fraction(h, P)
    else:
        from .quadfield import residue_ring
        R = residue_ring(fld, P)
        for h in R.elements():
            yield h, R.t(h)


def gauss_sum(chi_p: Callable, fld, P, prec: int = DEFAULT_PREC) -> PrecComplex:
    """C(chi_P) = sum over h mod P of chi_P(h) e(Tr(h/pi))."""
    total = PrecComplex.make(0, prec)
    buckets: dict = {}
    for h, t in _residues(fld, P):
        c = chi_p(h)
        if c.is_zero():
            continue
        buckets.setdefault(t, CycInt(0))
        buckets[t] = buckets[t] + c
    for t in sorted(buckets):
        c = buckets[t]
        if not c.is_zero():
            total = total + c.embed(prec) * exp_phase(t, prec)
    return total


def _character_is_trivial(chi_p: Callable, fld, P) -> bool:
    for h, _ in _residues(fld, P):
        v = chi_p(h)
        if not v.is_zero() and v != CycInt(1):
            return False
    return True


@dataclass
class LocalFactor:
    prime: object
    ramified: bool
    gauss: PrecComplex | None
    chi_delta: CycInt | None
    chi_cofactor: CycInt
    value: PrecComplex


def pseudo_eigenvalue(sys: EigenSystem, W: ALMatrix, prec: int = DEFAULT_PREC,
                      details: list | None = None) -> PrecComplex:
    """lam with f|W_A = lam f^(A): chi(A delta - B gamma) * prod_P chi_P(A/pi) lam_P."""
    fld = sys.fld
    if W.trivial:
        return PrecComplex.make(1, prec)
    k = sys.weight
    lam = _cyc(sys.nebentypus(_as_int(W.A * W.delta - W.B * W.gamma) if fld is None
                              else W.A * W.delta - W.B * W.gamma)).embed(prec)
    delta_F = _different(fld)
    for P, _ in _primes_of(fld, W.A):
        pi = _prime_gen(fld, P)
        Np = _prime_norm(P)
        a = sys.a_prime(P)
        if a.is_zero():
            raise DegeneratePseudoEigenvalue(f"a_P = 0 at {P}")
        Wp = build_al_matrix(fld, W.N, pi)
        chi_p = TwistedCharacters(sys.nebentypus, Wp).chi_A
        with mpmath.workprec(prec):
            if _character_is_trivial(chi_p, fld, P):
                scale = -mpmath.power(Np, 1 - mpmath.mpf(k) / 2)
                lp = a.conj().embed(prec) * PrecReal.make(scale, prec)
                C = cd = None
            else:
                C = gauss_sum(chi_p, fld, P, prec)
                cd = chi_p(delta_F)
                scale = mpmath.power(Np, -mpmath.mpf(k) / 2)
                lp = cd.embed(prec) * C * a.conj().embed(prec) * PrecReal.make(scale, prec)
        cof = chi_p(W.A / pi)
        val = cof.embed(prec) * lp
        if details is not None:
            details.append(LocalFactor(P, C is not None, C, cd, cof, val))
        lam = lam * val
    return lam


# --------------------------------------------------------------------------
# classical cusps of Gamma_0(N)
# --------------------------------------------------------------------------

def classical_cusps(N: int) -> list[tuple[str, int]]:
    """(label, c) for the cusps 1/c, c | N, of Gamma_0(N) (N square-free)."""
    N = int(N)
    if any(e > 1 for e in factorint(N).values()):
        raise UnsupportedLevel(f"Gamma_0({N}) cusps need a square-free level")
    out = []
    for c in sorted(divisors(N), reverse=True):
        label = "oo" if c == N else ("0" if c == 1 else f"1/{c}")
        out.append((label, c))
    return out


def _cusp_c(N: int, s) -> int:
    if isinstance(s, int):
        return s
    for label, c in classical_cusps(N):
        if label == s or (s in ("inf", "infinity", "∞") and label == "oo"):
            return c
    raise ValueError(f"unknown cusp {s!r} for Gamma_0({N})")


def cusp_matrix(N: int, c: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """tau in SL_2(Z) with tau(oo) the cusp 1/c."""
    if c == N:
        return ((1, 0), (0, 1))
    if c == 1:
        return ((0, -1), (1, 0))
    return ((1, 0), (c, 1))


def cusp_widths(N: int, c: int, chi: Callable[[int], object] | None = None,
                bound: int | None = None) -> tuple[int, int]:
    """(classical width, width at which chi is trivial on the stabilizer)."""
    tau = cusp_matrix(N, c)
    tinv = _minv(_mconv(None, tau))
    tau = _mconv(None, tau)
    h0 = hs = None
    for h in range(1, (bound or N) + 1):
        g = _mm(_mm(tau, ((Fraction(1), Fraction(h)), (Fraction(0), Fraction(1)))), tinv)
        if g[1][0] % N != 0:
            continue
        if h0 is None:
            h0 = h
        d = int(g[1][1])
        # f|tau is h-periodic exactly when chi(d) = 1
        if hs is None and (chi is None or _cyc(chi(d)) == CycInt(1)):
            hs = h
        if h0 is not None and hs is not None:
            break
    return h0, hs


# --------------------------------------------------------------------------
# decomposition tau^eps_h = gamma W_A D T
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Decomposition:
    gamma: tuple
    u1: object
    u2: object
    t: object

    def product(self, W: ALMatrix):
        fld_elt = self.u1
        zero = fld_elt * 0
        one = zero + 1
        D = ((self.u1, zero), (zero, self.u2))
        T = ((one, self.t), (zero, one))
        return _mm(_mm(_mm(self.gamma, W.matrix), D), T)


def _unit_candidates(fld, kmax: int):
    if fld is None:
        yield Fraction(1)
        yield Fraction(-1)
        return
    e = fld.eps
    for k in sorted(range(-kmax, kmax + 1), key=lambda k: (abs(k), -k)):
        u = e ** k if k >= 0 else e.inverse() ** (-k)
        yield u
        yield -u


def _in_gamma0(fld, g, N) -> bool:
    if not all(_integral(x) for row in g for x in row):
        return False
    if not _integral(g[1][0] / N):
        return False
    return _mdet(g) == _elt(fld, 1)


def decompose_cusp_matrix(fld, M, W: ALMatrix, kmax: int = 3, all_solutions: bool = False):
    """Search gamma*W*diag(u1,u2)*(1 t; 0 1) = M with gamma in Gamma_0(N).

    u1 runs over +-eps^k (|k| <= kmax), u2 is fixed by the determinant and t
    over (1/N) O_F mod O_F.  Every hit is re-verified by exact multiplication.
    """
    M = _mconv(fld, M)
    N = W.N
    Winv = _minv(W.matrix)
    ratio = _mdet(M) / W.det
    Nint = abs(int(_norm(fld, N))) if fld is not None else abs(_as_int(N))
    nrat = _as_int(N) if _is_rational(N) else Nint
    one, zero = _elt(fld, 1), _elt(fld, 0)
    E = ((zero, -one), (zero, zero))
    found = []
    for u1 in _unit_candidates(fld, kmax):
        u2 = ratio / u1
        Dinv = ((one / u1, zero), (zero, one / u2))
        G0 = _mm(_mm(M, Dinv), Winv)
        G1 = _mm(_mm(_mm(M, E), Dinv), Winv)
        # entries: G0 + t G1, lower-left divided by N
        forms = []
        for (i, j) in ((0, 0), (0, 1), (1, 0), (1, 1)):
            g0, g1 = G0[i][j], G1[i][j]
            if (i, j) == (1, 0):
                g0, g1 = g0 / N, g1 / N
            basis = [g1 / nrat, (g1 * fld.omega) / nrat] if fld is not None else [g1 / nrat]
            for c in range(2 if fld is not None else 1):
                c0 = _coords(fld, g0)[c]
                cs = [_coords(fld, b)[c] for b in basis]
                forms.append((c0, cs))
        den = math.lcm(*[f[0].denominator for f in forms], *[x.denominator for f in forms for x in f[1]])
        iforms = [(int(f[0] * den), [int(x * den) for x in f[1]]) for f in forms]
        ny = range(nrat) if fld is not None else range(1)
        for x in range(nrat):
            for y in ny:
                if all((c0 + x * cs[0] + (y * cs[1] if len(cs) > 1 else 0)) % den == 0
                       for c0, cs in iforms):
                    t = _from_coords(fld, x, y) / nrat if fld is not None else Fraction(x, nrat)
                    Tinv = ((one, -t), (zero, one))
                    g = _mm(_mm(_mm(M, Tinv), Dinv), Winv)
                    if _in_gamma0(fld, g, N):
                        dec = Decomposition(g, u1, u2, t)
                        assert dec.product(W) == M
                        if not all_solutions:
                            return dec
                        found.append(dec)
    if all_solutions:
        return found
    raise DecompositionFailure("no gamma W D T decomposition found")


# --------------------------------------------------------------------------
# expansions
# --------------------------------------------------------------------------

@dataclass
class CuspExpansion:
    """Coefficients a_(m),s (rational m) of f|[tau^eps_h] at a classical cusp."""

    label: str
    c: int
    widths: tuple[int, int]
    lam: PrecComplex
    twisted: EigenSystem
    W: ALMatrix
    matrix: tuple
    decomposition: Decomposition | None
    scalar: PrecComplex
    exact: list[CycInt] = field(default_factory=list)
    phases: list[Fraction] = field(default_factory=list)
    values: list[PrecComplex] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    source: str = "exact"

    @property
    def h0(self) -> int:
        return self.widths[0]

    @property
    def h(self) -> int:
        return self.widths[1]

    def __len__(self):
        return len(self.values)

    def coefficient(self, m: int) -> PrecComplex:
        return self.values[m - 1]

    def complex_values(self) -> list[complex]:
        return [complex(v) for v in self.values]


def _tau_eps_h(fld, tau, eps, h):
    """diag(eps,1) tau diag(eps,1)^-1 diag(h,1)."""
    tau = _mconv(fld, tau)
    eps = _elt(fld, eps)
    return ((tau[0][0] * h, tau[0][1] * eps), (tau[1][0] * h / eps, tau[1][1]))


def _mpq(x: Fraction):
    return mpmath.mpf(x.numerator) / x.denominator


def _unit_factor(fld, u1, u2, k, prec):
    """prod_j det(D_j)^(k/2) u2_j^(-k) for D = diag(u1, u2)."""
    dt = u1 * u2
    if fld is None:
        dt = Fraction(dt)
        if dt <= 0:
            raise ValueError("non-positive determinant")
        u2 = Fraction(u2)
        with mpmath.workprec(prec + 16):
            v = mpmath.sqrt(_mpq(dt)) ** k / _mpq(u2) ** k
        return PrecReal.make(v, prec)
    if not dt.is_totally_positive():
        raise ValueError("D must have totally positive determinant")
    n2 = u2.norm()
    nd = dt.norm()
    with mpmath.workprec(prec + 16):
        v = mpmath.sqrt(_mpq(nd)) ** k / _mpq(n2) ** k
    return PrecReal.make(v, prec)


def classical_cusp_expansion(sys: EigenSystem, s, eps=None, M: int = 50,
                             prec: int = DEFAULT_PREC, fallback: bool = True,
                             oracle_kwargs: dict | None = None) -> CuspExpansion:
    """Coefficients a_(m),s, m = 1..M, of f|[tau^eps_h] at the cusp s of Gamma_0(N)."""
    fld = sys.fld
    N = sys.level
    c = _cusp_c(N, s)
    label = next(l for l, cc in classical_cusps(N) if cc == c)
    if fld is None:
        eps = Fraction(1)
        chi_int = lambda n: sys.nebentypus(n)  # noqa: E731
    else:
        eps = fld.eps if eps is None else _elt(fld, eps)
        chi_int = lambda n: sys.nebentypus(fld(n))  # noqa: E731
    h0, hs = cusp_widths(N, c, chi_int)
    if h0 != hs:
        raise UnsupportedLevel(f"cusp {label}: widths {h0} and {hs} differ")
    tau = cusp_matrix(N, c)
    Mat = _tau_eps_h(fld, tau, eps, hs)
    W = build_al_matrix(fld, N, N // c)
    tw, _ = twisted_eigensystem(sys, W)
    lam = pseudo_eigenvalue(sys, W, prec)
    warnings: list[str] = []
    try:
        dec = decompose_cusp_matrix(fld, Mat, W)
    except DecompositionFailure as exc:
        if not fallback:
            raise
        msg = f"cusp {label}: {exc}; using the least-squares oracle"
        log.warning(msg)
        res = lsq_oracle(sys, Mat, M=M, **(oracle_kwargs or {}))
        vals = [PrecComplex.make(res.rational.get(m, 0j), prec) for m in range(1, M + 1)]
        return CuspExpansion(label, c, (h0, hs), lam, tw, W, Mat, None, PrecComplex.make(1, prec),
                             values=vals, warnings=[msg] + res.warnings, source="oracle")
    chi_d = _cyc(sys.nebentypus(_as_int(dec.gamma[1][1]) if fld is None else dec.gamma[1][1]))
    scalar = chi_d.embed(prec) * lam * _unit_factor(fld, dec.u1, dec.u2, sys.weight, prec)
    shift = dec.u2 / dec.u1
    unit_shift = fld is None or abs(shift.norm()) == 1
    sieve = SpfSieve(M)
    if unit_shift:
        exact = tw.coefficients_rational(M, sieve)
    else:
        exact = []
        for m in range(1, M + 1):
            nu = shift * m
            exact.append(tw.coefficient(nu) if _integral(nu) and nu.is_totally_positive() else CycInt(0))
    delta = _different(fld)
    phases = [_trace(fld, dec.t * m / delta) % 1 for m in range(1, M + 1)]
    vals = []
    for m in range(1, M + 1):
        a = exact[m - 1]
        if a.is_zero():
            vals.append(PrecComplex.make(0, prec))
        else:
            vals.append(scalar * a.embed(prec) * exp_phase(phases[m - 1], prec))
    return CuspExpansion(label, c, (h0, hs), lam, tw, W, Mat, dec, scalar, exact, phases, vals,
                         warnings)


# --------------------------------------------------------------------------
# least-squares oracle
# --------------------------------------------------------------------------

@dataclass
class OracleResult:
    coefficients: dict          # orbit representative (a, b) -> complex
    rational: dict              # m -> complex, for rational indices m <= M
    residual: float
    condition: float
    unknowns: int
    samples: int
    terms: int
    warnings: list
    seconds: float
    timings: dict = field(default_factory=dict)


def _nu_box(fld, U0: float, U1: float):
    """Integer (a, b) with 0 < nu_j / delta_j <= U_j at both embeddings, nu = a + b omega."""
    dl = _different(fld)
    d0, d1 = dl.sigma_float(0), dl.sigma_float(1)
    w0, w1 = float(fld.omega_embedding(0, 53)), float(fld.omega_embedding(1, 53))
    V0, V1 = U0 * d0, U1 * d1
    # nu_0 - nu_1 = b (w0 - w1), with nu_0 in (0, V0], nu_1 in (0, V1]
    dw = w0 - w1
    blo, bhi = sorted((-V1 / dw, V0 / dw))
    As, Bs = [], []
    for b in range(math.floor(blo) - 1, math.ceil(bhi) + 2):
        lo = max(-b * w0, -b * w1)
        hi = min(V0 - b * w0, V1 - b * w1)
        if hi <= lo:
            continue
        a = np.arange(math.floor(lo) + 1, math.floor(hi) + 1, dtype=np.int64)
        As.append(a)
        Bs.append(np.full(len(a), b, dtype=np.int64))
    A = np.concatenate(As) if As else np.zeros(0, dtype=np.int64)
    B = np.concatenate(Bs) if Bs else np.zeros(0, dtype=np.int64)
    n0 = A + B * w0
    n1 = A + B * w1
    keep = (n0 > 0) & (n1 > 0)
    return A[keep], B[keep]


def _mul_int(fld, a: int, b: int, p: int, q: int) -> tuple[int, int]:
    t, n = int(fld.omega_trace), int(fld.omega_norm)
    # (a + b w)(p + q w), w^2 = t w - n
    return a * p - n * b * q, a * q + b * p + t * b * q


def lsq_oracle(sys: EigenSystem, alpha, M: int = 20, samples: int | None = None, decay: float = 38.5,
               trace_bound: float = 72.0, window: float = 0.5, seed: int = 7,
               digits: float | None = None, cutoff: float | None = None) -> OracleResult:
    """Least-squares recovery of the expansion of f|alpha at oo.

    The unknowns are coefficients c_nu of e(Tr(nu z / delta)), nu >> 0 with
    Tr(nu/delta) <= trace_bound, tied together along orbits of the totally
    positive units.  Both imaginary parts equal decay / (2 pi trace_bound);
    real parts are uniform in a window around -d/c.
    """
    t0 = time.time()
    fld = sys.fld
    if fld is None:
        raise NotImplementedError("the oracle works over a real quadratic field")
    alpha = _mconv(fld, alpha)
    k = sys.weight
    warnings: list[str] = []
    Y = decay / (2 * math.pi * trace_bound)
    cutoff = cutoff if cutoff is not None else decay
    dl = _different(fld)
    d0, d1 = dl.sigma_float(0), dl.sigma_float(1)
    w0, w1 = float(fld.omega_embedding(0, 53)), float(fld.omega_embedding(1, 53))
    # unknowns: orbit representatives of the expansion of f|alpha
    eta = fld.tp_unit
    p, q = int(eta.a), int(eta.b)
    ei = eta.inverse()
    pi_, qi_ = int(ei.a), int(ei.b)
    L = math.log(eta.sigma_float(0) / eta.sigma_float(1))
    uA, uB = _nu_box(fld, trace_bound, trace_bound)
    reps: dict = {}
    for a, b in zip(uA.tolist(), uB.tolist()):
        m0, m1 = (a + b * w0) / d0, (a + b * w1) / d1
        if m0 + m1 > trace_bound:
            continue
        kk = math.floor(math.log((a + b * w0) / (a + b * w1)) / L + 0.5)
        ka, kb = a, b
        for _ in range(abs(kk)):
            ka, kb = _mul_int(fld, ka, kb, pi_, qi_) if kk > 0 else _mul_int(fld, ka, kb, p, q)
        reps.setdefault((ka, kb), []).append((m0, m1))
    keys = sorted(reps, key=lambda kk: (min(x + y for x, y in reps[kk]), kk))
    if samples is None:
        samples = max(2 * len(keys), 200)
    rng = np.random.default_rng(seed)
    emb = [[[alpha[i][j].sigma_float(e) for j in range(2)] for i in range(2)] for e in range(2)]
    centers = []
    for e in range(2):
        c_, d_ = emb[e][1]
        centers.append(-d_ / c_ if c_ != 0 else 0.0)
    X = [centers[e] + rng.uniform(-window, window, samples) for e in range(2)]
    Z = [X[e] + 1j * Y for e in range(2)]
    Wz, jac = [], np.ones(samples, dtype=complex)
    for e in range(2):
        (a_, b_), (c_, d_) = emb[e]
        det_e = a_ * d_ - b_ * c_
        if det_e <= 0:
            raise ValueError("alpha must have totally positive determinant")
        cz = c_ * Z[e] + d_
        Wz.append((a_ * Z[e] + b_) / cz)
        jac = jac * (math.sqrt(det_e) / cz) ** k
    ymin = [float(np.min(w.imag)) for w in Wz]
    # terms of f needed at the sampled points
    U = [cutoff / (2 * math.pi * ymin[e]) for e in range(2)]
    A, B = _nu_box(fld, U[0], U[1])
    timings = {"setup": time.time() - t0}
    cf = sys.coefficients_of_elements(A, B)
    timings["coefficients"] = time.time() - t0
    nz = cf != 0
    A, B, cf = A[nz], B[nz], cf[nz]
    mu0 = (A + B * w0) / d0
    mu1 = (A + B * w1) / d1
    order = np.argsort(mu0 * ymin[0] + mu1 * ymin[1])
    mu0, mu1, cf = mu0[order], mu1[order], cf[order]
    rhs = np.empty(samples, dtype=complex)
    for i in range(samples):
        ex = -2 * math.pi * (mu0 * Wz[0][i].imag + mu1 * Wz[1][i].imag)
        sel = ex > -cutoff - 2
        ph = 2 * math.pi * (mu0[sel] * Wz[0][i].real + mu1[sel] * Wz[1][i].real)
        rhs[i] = np.sum(cf[sel] * np.exp(ex[sel] + 1j * ph))
    rhs *= jac
    timings["samples"] = time.time() - t0
    if 2 * len(keys) > samples:
        warnings.append(f"only {samples} samples for {len(keys)} unknowns")
    Amat = np.zeros((samples, len(keys)), dtype=complex)
    for col, key in enumerate(keys):
        for m0, m1 in reps[key]:
            Amat[:, col] += np.exp(2j * math.pi * (m0 * Z[0] + m1 * Z[1]))
    timings["design"] = time.time() - t0
    sc = np.abs(Amat).max(axis=0)
    sol, _, _, sv = np.linalg.lstsq(Amat / sc, rhs, rcond=None)
    sol = sol / sc
    timings["solve"] = time.time() - t0
    cond = float(sv[0] / sv[-1]) if len(sv) and sv[-1] > 0 else float("inf")
    E = digits if digits is not None else decay / math.log(10)
    if cond > 10 ** (E / 2):
        warnings.append(f"condition number {cond:.3g} exceeds 10^{E / 2:.1f}; accuracy downgraded")
    resid = float(np.linalg.norm(Amat @ sol - rhs) / max(np.linalg.norm(rhs), 1e-300))
    coeffs = {key: complex(v) for key, v in zip(keys, sol)}
    rational = {m: coeffs.get((m, 0), 0j) for m in range(1, M + 1)}
    return OracleResult(coeffs, rational, resid, cond, len(keys), samples, len(cf), warnings,
                        time.time() - t0, timings)
