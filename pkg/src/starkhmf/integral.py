"""Unfolded period integrals and Petersson norms as Bessel series.

For a form of parallel weight k the integral of f(eps_1 zbar, eps_2 z) y^k over
Gamma_0(N)\\H equals

    4 sum_s (h_s0/h_s) sum_m a_(m),s (m/sqrt d)^(1-k) sum_n (x/(2^(3-i) pi))^(k-1) (x K_{k-2}(x) - K_{k-1}(x))

with x = 2^(2-i/2) pi n sqrt(m/(h_s sqrt d)), i = 0 for d = 1 mod 4 and 1
otherwise.  The classical Petersson norm is the same shape with x = 4 pi n
sqrt(m/h_s) and |a_m,s|^2 in place of a_(m),s.

Truncation: with X = ln(10) (digits + 2) only terms with x <= X are summed;
the rest is bounded using |x K_a(x)| + |K_b(x)| <= 3 sqrt(x) e^-x (x >= 10,
orders <= 2) and |a_(m)| <= 4m (weight one eigenvalues are sums of two roots
of unity, so |a_(m)| is at most the number of ideal divisors of m).

Workers are processes, not threads: mpmath keeps one global working precision.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
from mpmath import mpf

from .bignum import DEFAULT_PREC, PrecComplex, PrecReal, bessel_k01
from .cusps import CuspExpansion, _cusp_c, classical_cusp_expansion, classical_cusps, cusp_widths
from .hmf import EigenSystem

__all__ = [
    "IntegralResult", "CuspPartial", "PrecisionEscalation", "OracleFailure",
    "period_integral", "period_integral_from_expansions", "petersson_classical",
    "petersson_from_expansions", "bessel_kernel", "nelson_contour_check",
    "mellin_bessel_identity", "KERNEL_BOUND",
]

KERNEL_BOUND = 3      # |x K_a(x)| + |K_b(x)| <= KERNEL_BOUND sqrt(x) e^-x for x >= 10
BLOCK = 64            # m-block size of the deterministic summation


class PrecisionEscalation(ArithmeticError):
    def __init__(self, msg: str, suggested_bits: int):
        super().__init__(msg)
        self.suggested_bits = suggested_bits


class OracleFailure(ArithmeticError):
    pass


@dataclass
class CuspPartial:
    label: str
    h0: int
    h: int
    value: PrecComplex
    m_max: int
    n_max: int
    terms: int
    tail: mpf


@dataclass
class IntegralResult:
    value: PrecReal
    imag: PrecReal
    cusps: list[CuspPartial]
    tail: PrecReal
    digits: int
    prec: int
    cutoff: mpf
    seconds: float
    kind: str = "period"
    metadata: dict = field(default_factory=dict)

    def record(self, digits: int | None = None) -> dict[str, str]:
        """Flat key=value view; numeric fields are rendered deterministically."""
        dg = digits or max(self.digits + 6, 15)
        out = {
            f"{self.kind}.value": self.value.decimal(dg),
            f"{self.kind}.imag": mpmath.nstr(self.imag.value, 5),
            f"{self.kind}.tail_bound": mpmath.nstr(self.tail.value, 5),
            f"{self.kind}.cutoff_x": mpmath.nstr(self.cutoff, 10),
            f"{self.kind}.prec_bits": str(self.prec),
            f"{self.kind}.digits": str(self.digits),
        }
        for cp in self.cusps:
            key = f"{self.kind}.cusp[{cp.label}]"
            out[f"{key}.widths"] = f"{cp.h0},{cp.h}"
            out[f"{key}.M_m"] = str(cp.m_max)
            out[f"{key}.M_n"] = str(cp.n_max)
            out[f"{key}.partial"] = mpmath.nstr(cp.value.re.value, dg)
        for k, v in self.metadata.items():
            out[f"{self.kind}.{k}"] = str(v)
        return out


# --------------------------------------------------------------------------
# kernel and block sums
# --------------------------------------------------------------------------

def bessel_kernel(x, k: int, base, prec: int = DEFAULT_PREC) -> mpf:
    """(x/base)^(k-1) (x K_{k-2}(x) - K_{k-1}(x)), K_{-1} = K_1."""
    with mpmath.workprec(prec + 16):
        x = mpf(x)
        k0, k1 = bessel_k01(x, prec)
        ks = {0: k0, 1: k1}
        if k >= 3:
            ks[2] = k0 + 2 * k1 / x
        if k > 3:
            raise NotImplementedError("kernels need K_order with order <= 2")
        v = x * ks[abs(k - 2)] - ks[abs(k - 1)]
        if k != 1:
            v = v * (x / base) ** (k - 1)
        return +v


def _block_sums(args) -> list[tuple[int, mpf, int]]:
    """Inner n-sums for a block of m: [(m, S_m, n_max)], S_m = sum_{x <= X} kernel."""
    c_str, ms, k, base_str, X_str, prec = args
    out = []
    with mpmath.workprec(prec + 16):
        c = mpf(c_str)
        X = mpf(X_str)
        base = mpf(base_str)
        for m in ms:
            step = c * mpmath.sqrt(m)
            nmax = int(mpmath.floor(X / step))
            s = mpf(0)
            terms = []
            for n in range(1, nmax + 1):
                terms.append(bessel_kernel(step * n, k, base, prec))
            s = _pairwise(terms)
            out.append((m, +s, nmax))
    return out


def _pairwise(xs: Sequence):
    if not xs:
        return mpf(0)
    xs = list(xs)
    while len(xs) > 1:
        nxt = [xs[i] + xs[i + 1] for i in range(0, len(xs) - 1, 2)]
        if len(xs) % 2:
            nxt.append(xs[-1])
        xs = nxt
    return xs[0]


def _inner_sums(c: mpf, M: int, k: int, base: mpf, X: mpf, prec: int,
                workers: int) -> dict[int, tuple[mpf, int]]:
    ms = list(range(1, M + 1))
    blocks = [ms[i:i + BLOCK] for i in range(0, len(ms), BLOCK)]
    with mpmath.workprec(prec + 16):
        jobs = [(mpmath.nstr(c, prec // 3 + 10), b, k, mpmath.nstr(base, prec // 3 + 10),
                 mpmath.nstr(X, prec // 3 + 10), prec) for b in blocks]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_block_sums, jobs))
    else:
        results = [_block_sums(j) for j in jobs]
    out = {}
    for res in results:
        for m, s, nmax in res:
            out[m] = (s, nmax)
    return out


# --------------------------------------------------------------------------
# truncation
# --------------------------------------------------------------------------

def _check_precision(prec: int, digits: int):
    need = int(math.ceil((digits + 4) * math.log2(10))) + 24
    if prec < need:
        raise PrecisionEscalation(f"{prec} bits cannot deliver {digits} digits", need)


def _tail_bound(A: float, p: float, q: float, c: float, X: float, extra: float = 0.0) -> mpf:
    """Bound for sum over (m, n), c n sqrt(m) > X, of A m^p u^q e^-u, u = c n sqrt(m).

    For fixed n the summand is decreasing in m past the cutoff (u > X >= 10 > p + q),
    so sum_{m >= m0} <= F(m0) + integral_{m0}^oo, and the integral is
    2 A (cn)^(-2p-2) Gamma(2p+q+2, c n sqrt(m0)).
    """
    with mpmath.workprec(80):
        total = mpf(0)
        n = 1
        while True:
            cn = mpf(c) * n
            m0 = max(1, int(mpmath.floor((X / cn) ** 2)) + 1)
            u0 = cn * mpmath.sqrt(m0)
            F0 = A * mpf(m0) ** p * u0 ** q * mpmath.exp(-u0)
            I = 2 * A * cn ** (-2 * p - 2) * mpmath.gammainc(2 * p + q + 2, u0)
            t = F0 + I
            total += t
            if cn > X and t < total * mpf(10) ** -30:
                break
            n += 1
            if n > 10 ** 6:
                break
        return total * (1 + extra)


# --------------------------------------------------------------------------
# period integral
# --------------------------------------------------------------------------

def _i_flag(d: int) -> int:
    return 0 if d % 4 == 1 else 1


def _period_constants(d: int, h: int, prec: int):
    i = _i_flag(d)
    with mpmath.workprec(prec + 16):
        c = mpmath.power(2, 2 - mpf(i) / 2) * mpmath.pi / mpmath.sqrt(h * mpmath.sqrt(d))
        base = mpmath.power(2, 3 - i) * mpmath.pi
    return c, base


def _coefficient_bound(exp: CuspExpansion) -> float:
    """|a_(m),s| <= bound * m for all m (exact data: |scalar| * 4)."""
    if exp.source == "exact":
        return 4 * float(abs(complex(exp.scalar)))
    # oracle data: scale by the largest observed |a_m|/m
    return 4 * max([1.0] + [abs(complex(v)) / m for m, v in enumerate(exp.values, 1)])


def _truncation(c_list, digits: int, tol: float, tail_of) -> tuple[mpf, list[mpf]]:
    X = mpf(math.log(10) * (digits + 2))
    X = max(X, mpf(10))
    for _ in range(40):
        tails = [tail_of(c, X) for c in c_list]
        if sum(tails) <= tol:
            return X, tails
        X += mpf(math.log(10))
    raise PrecisionEscalation("tail bound does not reach the tolerance", 0)


def period_integral_from_expansions(expansions: Sequence[CuspExpansion], d: int, k: int = 1,
                                    digits: int = 6, prec: int | None = None,
                                    tol: float | None = None, workers: int = 1,
                                    level: int | None = None) -> IntegralResult:
    """The Bessel series of the period integral for supplied cusp expansions."""
    t0 = time.time()
    prec = prec or max(DEFAULT_PREC // 2, int((digits + 10) * 3.33) + 32)
    _check_precision(prec, digits)
    tol = tol if tol is not None else 10.0 ** (-digits) / 10
    consts = [_period_constants(d, e.h, prec) for e in expansions]
    bounds = [_coefficient_bound(e) for e in expansions]
    weights = [e.h0 / e.h for e in expansions]

    # summand bound: 4 w B m (m/sqrt d)^(1-k) * 3 (x/base)^(k-1) sqrt(x) e^-x
    def tail_c(idx):
        c, base = consts[idx]
        A = 4 * weights[idx] * bounds[idx] * KERNEL_BOUND * float(d) ** ((k - 1) / 2) \
            / float(base) ** (k - 1)
        return lambda X: _tail_bound(A, 2 - k, k - 0.5, float(c), float(X))

    tails_f = [tail_c(i) for i in range(len(expansions))]
    X, tails = _truncation(range(len(expansions)), digits, tol, lambda i, X: tails_f[i](X))
    partials = []
    total = PrecComplex.make(0, prec)
    for idx, exp in enumerate(expansions):
        c, base = consts[idx]
        with mpmath.workprec(prec + 16):
            M = int(mpmath.floor((X / c) ** 2))
        if M > len(exp.values):
            raise ValueError(f"cusp {exp.label}: {M} coefficients needed, {len(exp.values)} supplied")
        inner = _inner_sums(c, M, k, base, X, prec, workers)
        with mpmath.workprec(prec + 16):
            terms = []
            nterms = 0
            sd = mpmath.sqrt(d)
            for m in range(1, M + 1):
                s, nmax = inner[m]
                nterms += nmax
                a = exp.values[m - 1].value
                if a == 0 or nmax == 0:
                    continue
                pref = (mpf(m) / sd) ** (1 - k) if k != 1 else 1
                terms.append(a * pref * s)
            acc = _pairwise(terms) if terms else mpmath.mpc(0)
            acc = 4 * mpf(exp.h0) / exp.h * acc
            err_round = mpmath.ldexp(sum(abs(t) for t in terms) + 1, 12 - prec) * 4
        cp = CuspPartial(exp.label, exp.h0, exp.h,
                         PrecComplex(PrecReal(+acc.real, prec, err_round),
                                     PrecReal(+acc.imag, prec, err_round)),
                         M, int(inner[1][1]) if M else 0, nterms, tails[idx])
        partials.append(cp)
        total = total + cp.value
    tail = PrecReal.make(sum(tails), prec)
    value = PrecReal(total.re.value, prec, total.re.err + tail.value)
    meta = {"group": f"Gamma_0({level})" if level else "Gamma_0(N)",
            "gamma1_factor": "phi(N) (not applied)", "workers": workers}
    return IntegralResult(value, total.im, partials, tail, digits, prec, X, time.time() - t0,
                          "integral", meta)


def period_integral(sys: EigenSystem, eps=None, prec: int | None = None, digits: int = 6,
                    tol: float | None = None, workers: int = 1,
                    cusps: Sequence[str] | None = None) -> tuple[IntegralResult, list[CuspExpansion]]:
    """Integral of f(eps_1 zbar, eps_2 z) y^k over Gamma_0(N)\\H for a system over F."""
    if sys.fld is None:
        raise ValueError("period_integral needs a system over a real quadratic field")
    prec = prec or max(DEFAULT_PREC // 2, int((digits + 10) * 3.33) + 32)
    _check_precision(prec, digits)
    d = sys.fld.d
    labels = [l for l, _ in classical_cusps(sys.level)]
    if cusps is not None:
        labels = [l for l in labels if l in cusps]
    # coefficient counts from the cutoff; expansions computed once at that length
    X = mpf(math.log(10) * (digits + 2))
    exps = []
    for lab in labels:
        _, h = cusp_widths(sys.level, _cusp_c(sys.level, lab),
                           lambda n: sys.nebentypus(sys.fld(n)))
        c, _ = _period_constants(d, h, prec)
        M = int(mpmath.floor(((X + 3 * mpf(math.log(10))) / c) ** 2)) + 1
        exps.append(classical_cusp_expansion(sys, lab, eps, M, prec))
    # extend if the tail forces a larger cutoff
    while True:
        try:
            res = period_integral_from_expansions(exps, d, sys.weight, digits, prec, tol, workers,
                                                  sys.level)
            return res, exps
        except ValueError as exc:
            if "coefficients needed" not in str(exc):
                raise
            exps = [classical_cusp_expansion(sys, e.label, eps, 2 * len(e.values), prec)
                    for e in exps]


# --------------------------------------------------------------------------
# Petersson norm over Q
# --------------------------------------------------------------------------

def petersson_from_expansions(expansions: Sequence[CuspExpansion], k: int = 1, digits: int = 6,
                              prec: int | None = None, tol: float | None = None,
                              workers: int = 1, level: int | None = None) -> IntegralResult:
    t0 = time.time()
    prec = prec or max(DEFAULT_PREC // 2, int((digits + 10) * 3.33) + 32)
    _check_precision(prec, digits)
    tol = tol if tol is not None else 10.0 ** (-digits) / 10
    with mpmath.workprec(prec + 16):
        base = 8 * mpmath.pi
        consts = [4 * mpmath.pi / mpmath.sqrt(e.h) for e in expansions]
    bounds = [_coefficient_bound(e) ** 2 for e in expansions]
    weights = [e.h0 / e.h for e in expansions]

    def tail_of(i, X):
        A = 4 * weights[i] * bounds[i] * KERNEL_BOUND / float(base) ** (k - 1)
        return _tail_bound(A, 3 - k, k - 0.5, float(consts[i]), float(X))

    X, tails = _truncation(range(len(expansions)), digits, tol, tail_of)
    partials = []
    total = PrecComplex.make(0, prec)
    for idx, exp in enumerate(expansions):
        c = consts[idx]
        with mpmath.workprec(prec + 16):
            M = int(mpmath.floor((X / c) ** 2))
        if M > len(exp.values):
            raise ValueError(f"cusp {exp.label}: {M} coefficients needed, {len(exp.values)} supplied")
        inner = _inner_sums(c, M, k, base, X, prec, workers)
        with mpmath.workprec(prec + 16):
            terms = []
            nterms = 0
            for m in range(1, M + 1):
                s, nmax = inner[m]
                nterms += nmax
                a = exp.values[m - 1].value
                if a == 0 or nmax == 0:
                    continue
                terms.append(abs(a) ** 2 * mpf(m) ** (1 - k) * s)
            acc = _pairwise(terms) if terms else mpf(0)
            acc = 4 * mpf(exp.h0) / exp.h * acc
            err_round = mpmath.ldexp(sum(abs(t) for t in terms) + 1, 12 - prec) * 4
        cp = CuspPartial(exp.label, exp.h0, exp.h,
                         PrecComplex(PrecReal(+acc, prec, err_round), PrecReal.make(0, prec)),
                         M, int(inner[1][1]) if M else 0, nterms, tails[idx])
        partials.append(cp)
        total = total + cp.value
    tail = PrecReal.make(sum(tails), prec)
    value = PrecReal(total.re.value, prec, total.re.err + tail.value)
    meta = {"group": f"Gamma_0({level})" if level else "Gamma_0(N)",
            "normalization": "no volume division", "workers": workers}
    return IntegralResult(value, total.im, partials, tail, digits, prec, X, time.time() - t0,
                          "petersson", meta)


def petersson_classical(sys: EigenSystem, prec: int | None = None, digits: int = 6,
                        tol: float | None = None, workers: int = 1,
                        scale=1) -> tuple[IntegralResult, list[CuspExpansion]]:
    """<f, f> from the expansions of a classical newform at all cusps of Gamma_0(N)."""
    if sys.fld is not None:
        raise ValueError("petersson_classical needs a system over Q")
    prec = prec or max(DEFAULT_PREC // 2, int((digits + 10) * 3.33) + 32)
    exps = [classical_cusp_expansion(sys, lab, None, 64, prec) for lab, _ in classical_cusps(sys.level)]
    if scale != 1:
        for e in exps:
            e.values = [v * PrecComplex.make(scale, prec) for v in e.values]
            e.scalar = e.scalar * PrecComplex.make(scale, prec)
    while True:
        try:
            return petersson_from_expansions(exps, sys.weight, digits, prec, tol, workers,
                                             sys.level), exps
        except ValueError as exc:
            if "coefficients needed" not in str(exc):
                raise
            new = []
            for e in exps:
                n = classical_cusp_expansion(sys, e.label, None, 2 * len(e.values), prec)
                if scale != 1:
                    n.values = [v * PrecComplex.make(scale, prec) for v in n.values]
                    n.scalar = n.scalar * PrecComplex.make(scale, prec)
                new.append(n)
            exps = new


# --------------------------------------------------------------------------
# contour-integral oracle
# --------------------------------------------------------------------------

def mellin_bessel_identity(x, nu, c=None, prec: int = 80) -> tuple[mpf, mpf]:
    """(contour integral, x K_{nu-1}(x) - K_nu(x)) for

        int_(c) (t - 1/2) Gamma(t) Gamma(t + nu) / (x/2)^(2t + nu) dt / 2 pi i.
    """
    with mpmath.workprec(prec):
        x = mpf(x)
        nu = mpf(nu)
        c = mpf(c) if c is not None else mpf(3) / 2
        z = x / 2

        def f(t):
            s = c + 1j * t
            return (s - mpf(1) / 2) * mpmath.gamma(s) * mpmath.gamma(s + nu) / z ** (2 * s + nu)

        # conjugate symmetry: the integral is (1/pi) int_0^oo Re f
        val = mpmath.quad(lambda t: mpmath.re(f(t)), [0, 5, 10, 20, 40, 80]) / mpmath.pi
        closed = x * mpmath.besselk(nu - 1, x) - mpmath.besselk(nu, x)
        return val, closed


def nelson_contour_check(profile: Sequence[tuple[object, object]], k: int = 1,
                         delta: float = 0.5, grid: Sequence[float] | None = None,
                         prec: int = 80, tol: float = 1e-8, nmax: int | None = None) -> dict:
    """Compare the contour form of the unfolding with the closed Bessel sum.

    ``profile`` lists (a_j, r_j) for the constant term P(y) = sum_j a_j y^k e^(-r_j y);
    its Mellin transform is sum_j a_j Gamma(s+k-1) / r_j^(s+k-1).  Returns a dict
    with both evaluations and their difference; raises OracleFailure when the
    quadrature does not settle.
    """
    profile = list(profile)
    if len(profile) > 5:
        raise ValueError("the contour oracle is meant for at most 5 terms")
    nu = k - 1
    with mpmath.workprec(prec):
        sig = 1 + mpf(delta)
        terms = [(mpmath.mpmathify(a), mpmath.mpmathify(r)) for a, r in profile]
        if not terms or all(a == 0 for a, _ in terms):
            return {"contour": mpf(0), "closed": mpf(0), "difference": mpf(0), "ok": True}

        def integrand(t):
            s = sig + 1j * t
            xi = mpmath.gamma(s) * mpmath.pi ** (-s) * mpmath.zeta(2 * s)
            mel = sum(a * mpmath.gamma(s + nu) / r ** (s + nu) for a, r in terms)
            return mpmath.re((2 * s - 1) * 2 * xi * mel)

        pts = list(grid) if grid is not None else [0, 2, 5, 10, 20, 40, 80]
        v1 = mpmath.quad(integrand, pts, error=True)
        contour = v1[0] / mpmath.pi
        if v1[1] > tol * max(1, abs(contour)):
            raise OracleFailure(f"contour quadrature error estimate {v1[1]}")
        closed = mpf(0)
        for a, r in terms:
            n = 1
            while True:
                x = 2 * n * mpmath.sqrt(mpmath.pi * r)
                term = 4 * a * r ** (-nu) * (x / 2) ** nu * (
                    x * mpmath.besselk(nu - 1, x) - mpmath.besselk(nu, x))
                closed += term
                if abs(term) < mpf(10) ** (-prec // 3) or (nmax and n >= nmax):
                    break
                n += 1
        diff = abs(contour - closed)
        return {"contour": contour, "closed": closed, "difference": diff,
                "ok": diff <= tol * max(1, abs(closed))}
