"""Precision-managed real/complex scalars and the special functions used downstream.

Values wrap ``mpmath.mpf`` and carry the working precision (in bits) together with
a heuristic absolute error estimate.  Arithmetic propagates the estimate with the
usual first-order rules plus one rounding unit per operation.

The K-Bessel kernels are implemented here rather than delegated to
``mpmath.besselk`` so the truncation logic (and hence the error budget) is explicit:
an ascending series below the crossover ``x = 8 * prec / 53`` and Steed's
continued fraction (switching to the asymptotic series when it is already
accurate) above it.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import mpmath
from mpmath import mp, mpf

DEFAULT_PREC = 192
GUARD_BITS = 32

Number = Union[int, float, Fraction, str, mpf, "PrecReal"]


def _to_mpf(x, prec: int) -> mpf:
    with mpmath.workprec(prec):
        if isinstance(x, Fraction):
            return mpf(x.numerator) / x.denominator
        return mpf(x)


def _ulp(v: mpf, prec: int) -> mpf:
    if not v:
        return mpf(0)
    return mpmath.ldexp(mpf(1), int(mpmath.floor(mpmath.log(abs(v), 2))) + 1 - prec)


@dataclass(frozen=True)
class PrecReal:
    """A real number at ``prec`` bits with absolute error estimate ``err``."""

    value: mpf
    prec: int = DEFAULT_PREC
    err: mpf = mpf(0)

    def __post_init__(self):
        if self.err < 0:
            raise ValueError("error bound must be non-negative")

    @classmethod
    def make(cls, x: Number, prec: int = DEFAULT_PREC, err=0) -> "PrecReal":
        if isinstance(x, PrecReal):
            return cls(x.value, prec, max(x.err, mpf(err)))
        v = _to_mpf(x, prec)
        exact = isinstance(x, (int, Fraction)) and _to_mpf(x, prec + 64) == v
        e = mpf(err) if exact else mpf(err) + _ulp(v, prec)
        return cls(v, prec, e)

    # --- helpers -------------------------------------------------------
    def _coerce(self, other) -> "PrecReal":
        if isinstance(other, PrecReal):
            return other
        return PrecReal.make(other, self.prec)

    def _wrap(self, v: mpf, err: mpf, prec: int) -> "PrecReal":
        return PrecReal(v, prec, abs(err) + _ulp(v, prec))

    @property
    def errbound(self) -> mpf:
        return self.err

    # --- arithmetic ----------------------------------------------------
    def __add__(self, other):
        o = self._coerce(other)
        p = min(self.prec, o.prec)
        with mpmath.workprec(p):
            return self._wrap(self.value + o.value, self.err + o.err, p)

    __radd__ = __add__

    def __neg__(self):
        return PrecReal(-self.value, self.prec, self.err)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        p = min(self.prec, o.prec)
        with mpmath.workprec(p):
            v = self.value * o.value
            e = abs(self.value) * o.err + abs(o.value) * self.err + self.err * o.err
            return self._wrap(v, e, p)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if not o.value:
            raise ZeroDivisionError("division by zero PrecReal")
        p = min(self.prec, o.prec)
        with mpmath.workprec(p):
            v = self.value / o.value
            denom = abs(o.value) - o.err
            if denom <= 0:
                e = mpmath.inf
            else:
                e = (self.err + abs(v) * o.err) / denom
            return self._wrap(v, e, p)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __abs__(self):
        return PrecReal(abs(self.value), self.prec, self.err)

    def __float__(self):
        return float(self.value)

    def __lt__(self, other):
        return self.value < self._coerce(other).value

    def __le__(self, other):
        return self.value <= self._coerce(other).value

    def __gt__(self, other):
        return self.value > self._coerce(other).value

    def __ge__(self, other):
        return self.value >= self._coerce(other).value

    def __repr__(self):
        return f"PrecReal({mpmath.nstr(self.value, 20)} ± {mpmath.nstr(self.err, 3)}, {self.prec}b)"

    def with_prec(self, prec: int) -> "PrecReal":
        return PrecReal(self.value, prec, self.err)

    def sqrt(self) -> "PrecReal":
        if self.value < 0:
            raise ValueError("sqrt of negative PrecReal")
        with mpmath.workprec(self.prec):
            v = mpmath.sqrt(self.value)
            e = self.err / (2 * v) if v else mpmath.sqrt(self.err)
            return self._wrap(v, e, self.prec)

    def log(self) -> "PrecReal":
        if self.value <= 0:
            raise ValueError("log of non-positive PrecReal")
        with mpmath.workprec(self.prec):
            v = mpmath.log(self.value)
            return self._wrap(v, self.err / (self.value - min(self.err, self.value / 2)), self.prec)

    def exp(self) -> "PrecReal":
        with mpmath.workprec(self.prec):
            v = mpmath.exp(self.value)
            return self._wrap(v, v * (mpmath.exp(self.err) - 1), self.prec)

    def decimal(self, digits: int) -> str:
        """Fixed rendering with ``digits`` significant digits (stable across runs)."""
        with mpmath.workprec(self.prec):
            return mpmath.nstr(self.value, digits, strip_zeros=False, min_fixed=-mpmath.inf,
                               max_fixed=mpmath.inf)


@dataclass(frozen=True)
class PrecComplex:
    re: PrecReal
    im: PrecReal

    @classmethod
    def make(cls, z, prec: int = DEFAULT_PREC) -> "PrecComplex":
        if isinstance(z, PrecComplex):
            return z
        if isinstance(z, PrecReal):
            return cls(z, PrecReal.make(0, z.prec))
        with mpmath.workprec(prec):
            z = mpmath.mpc(z)
        return cls(PrecReal.make(z.real, prec), PrecReal.make(z.imag, prec))

    @property
    def prec(self) -> int:
        return min(self.re.prec, self.im.prec)

    @property
    def errbound(self) -> mpf:
        return self.re.err + self.im.err

    @property
    def value(self) -> mpmath.mpc:
        # build at the carried precision; the ambient one may be lower
        with mpmath.workprec(self.prec):
            return mpmath.mpc(self.re.value, self.im.value)

    def _coerce(self, other) -> "PrecComplex":
        if isinstance(other, PrecComplex):
            return other
        if isinstance(other, PrecReal):
            return PrecComplex(other, PrecReal.make(0, other.prec))
        return PrecComplex.make(other, self.prec)

    def __add__(self, other):
        o = self._coerce(other)
        return PrecComplex(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return PrecComplex(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __mul__(self, other):
        o = self._coerce(other)
        return PrecComplex(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def conjugate(self) -> "PrecComplex":
        return PrecComplex(self.re, -self.im)

    def __abs__(self) -> PrecReal:
        p = self.prec
        with mpmath.workprec(p):
            v = mpmath.hypot(self.re.value, self.im.value)
        return PrecReal(v, p, self.re.err + self.im.err + _ulp(v, p))

    def __complex__(self):
        return complex(float(self.re.value), float(self.im.value))

    def __repr__(self):
        return f"PrecComplex({self.re!r}, {self.im!r})"


def exp_phase(t: Number, prec: int = DEFAULT_PREC) -> PrecComplex:
    """e^{2 pi i t}.  Rational ``t`` is reduced mod 1 exactly before evaluation."""
    if isinstance(t, (int, Fraction)):
        t = Fraction(t) % 1
        err_t = mpf(0)
    elif isinstance(t, PrecReal):
        err_t = t.err
        t = t.value
    else:
        err_t = mpf(0)
    with mpmath.workprec(prec + GUARD_BITS):
        tv = _to_mpf(t, prec + GUARD_BITS)
        c = mpmath.cospi(2 * tv)
        s = mpmath.sinpi(2 * tv)
        e = 2 * mpmath.pi * err_t
    with mpmath.workprec(prec):
        return PrecComplex(PrecReal(+c, prec, e + _ulp(c, prec)), PrecReal(+s, prec, e + _ulp(s, prec)))


# --------------------------------------------------------------------------
# Modified Bessel functions of the second kind, orders 0 and 1
# --------------------------------------------------------------------------

def bessel_crossover(prec: int) -> float:
    """Series/continued-fraction switch point."""
    return 8.0 * prec / 53.0


def _k01_series(x: mpf, wp: int):
    # K0 from the ascending series, K1 from the Wronskian I0 K1 + I1 K0 = 1/x.
    # The series loses about 2x/ln 2 bits to cancellation, so pad accordingly.
    pad = int(2 * float(x) * 1.4427) + 16
    with mpmath.workprec(wp + pad):
        x = mpf(x)
        y = x * x / 4
        term = mpf(1)
        h = mpf(0)
        i0 = mpf(1)
        i1 = x / 2
        t1 = x / 2
        ssum = mpf(0)
        eps = mpmath.ldexp(1, -(wp + pad))
        k = 0
        while True:
            k += 1
            term = term * y / (k * k)
            h += mpf(1) / k
            t1 = t1 * y / (k * (k + 1))
            i0 += term
            i1 += t1
            ssum += term * h
            if term < eps * i0 and term * h < eps * abs(ssum):
                break
        k0 = -(mpmath.log(x / 2) + mpmath.euler) * i0 + ssum
        k1 = (1 / x - i1 * k0) / i0
        return +k0, +k1, k


def _k01_cf(x: mpf, wp: int):
    # Steed's evaluation of Temme's CF2 (valid and rapidly convergent for x >= 2).
    with mpmath.workprec(wp + 16):
        x = mpf(x)
        eps = mpmath.ldexp(1, -(wp + 8))
        b = 2 * (1 + x)
        d = 1 / b
        h = delh = d
        q1, q2 = mpf(0), mpf(1)
        a1 = mpf(1) / 4
        q = c = a1
        a = -a1
        s = 1 + q * delh
        i = 1
        while True:
            i += 1
            a -= 2 * (i - 1)
            c = -a * c / i
            qnew = (q1 - b * q2) / a
            q1, q2 = q2, qnew
            q += c * qnew
            b += 2
            d = 1 / (b + a * d)
            delh = (b * d - 1) * delh
            h += delh
            dels = q * delh
            s += dels
            if abs(dels) < eps * abs(s) and i > 2:
                break
            if i > 100000:
                raise ArithmeticError("Bessel continued fraction did not converge")
        k0 = mpmath.sqrt(mpmath.pi / (2 * x)) * mpmath.exp(-x) / s
        k1 = k0 * (x + mpf(1) / 2 - a1 * h) / x
        return +k0, +k1, i


def _k01_asymptotic(x: mpf, wp: int):
    # Hankel expansion; the remainder is bounded by the first omitted term for
    # real x and nu in {0, 1} once past the turning index, so we only use it
    # when the smallest term is already below 2^-wp.
    with mpmath.workprec(wp + 16):
        x = mpf(x)
        eps = mpmath.ldexp(1, -(wp + 8))
        out = []
        for nu in (0, 1):
            mu = 4 * nu * nu
            term = mpf(1)
            total = mpf(1)
            k = 0
            while True:
                k += 1
                nxt = term * (mu - (2 * k - 1) ** 2) / (k * 8 * x)
                if abs(nxt) > abs(term) and k > nu + 1:
                    return None
                term = nxt
                total += term
                if abs(term) < eps:
                    break
            out.append(mpmath.sqrt(mpmath.pi / (2 * x)) * mpmath.exp(-x) * total)
        return out[0], out[1], k


def bessel_k01(x, prec: int = DEFAULT_PREC, guard: int = GUARD_BITS):
    """Return (K0(x), K1(x)) as mpf at ``prec + guard`` working bits.

    Internal fast path for summation loops; no PrecReal wrapping.
    """
    wp = prec + guard
    if isinstance(x, PrecReal):
        x = x.value
    x = mpf(x)
    if x <= 0:
        raise ValueError("bessel_k requires x > 0")
    if x < bessel_crossover(prec):
        k0, k1, _ = _k01_series(x, wp)
    else:
        # the asymptotic tail is only usable once e^{-2x} is below the target
        r = _k01_asymptotic(x, wp) if 2 * x > wp * 0.6931 else None
        if r is None:
            r = _k01_cf(x, wp)
        k0, k1, _ = r
    return k0, k1


def bessel_k(order: int, x, prec: int | None = None) -> PrecReal:
    """K_order(x) for order in {0, 1, 2} (negative orders folded by K_{-n} = K_n).

    The returned error estimate is 2^(8 - prec) * |K|, well above the
    truncation/rounding error of either regime (checked by the doubled
    precision recompute in the test-suite).
    """
    order = abs(int(order))
    if order > 2:
        raise NotImplementedError("only K_0, K_1 and K_2 are supported")
    if isinstance(x, PrecReal):
        prec = prec or x.prec
        xv = x.value
        xerr = x.err
    else:
        prec = prec or DEFAULT_PREC
        xv = _to_mpf(x, prec + GUARD_BITS)
        xerr = mpf(0)
    if xv <= 0:
        raise ValueError("bessel_k requires x > 0")
    k0, k1 = bessel_k01(xv, prec)
    with mpmath.workprec(prec):
        if order == 0:
            v = +k0
            deriv = k1  # |dK0/dx| = K1
        elif order == 1:
            v = +k1
            deriv = k0 + k1 / xv  # |dK1/dx| = K0 + K1/x
        else:
            v = k0 + 2 * k1 / xv  # K2 = K0 + (2/x) K1
            deriv = k1 + 2 * v / xv  # |dK2/dx| = K1 + (2/x) K2
        err = mpmath.ldexp(abs(v), 8 - prec) + deriv * xerr
        return PrecReal(v, prec, err)
