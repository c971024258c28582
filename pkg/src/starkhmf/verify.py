"""End-to-end runs: integral / log|u| (or <f, f> / log|u|) and recognition of the ratio."""
from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import mpmath

from .bignum import PrecReal
from .cusps import classical_cusps
from .hmf import CoeffCache, base_change, load_form
from .integral import period_integral, petersson_classical
from .quadfield import make_field
from .stark import MinkowskiData, UnitVector, d5_unit_log, parse_logorbit_file

__all__ = [
    "RecognizedConstant", "QuadraticConstant", "recognize_rational", "recognize_quadratic",
    "VerificationJob", "parse_job", "Report", "StageError", "run_verification",
    "run_petersson_check", "ENV_CACHE", "ENV_THREADS",
]

ENV_CACHE = "STARK_HMF_CACHE_DIR"
ENV_THREADS = "STARK_HMF_THREADS"


# --------------------------------------------------------------------------
# recognition
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticConstant:
    """(a + b sqrt(d0)) / q in lowest terms, q > 0."""
    a: int
    b: int
    q: int
    d0: int = 5

    def value(self, prec: int = 128):
        with mpmath.workprec(prec):
            return (self.a + self.b * mpmath.sqrt(self.d0)) / self.q

    def __str__(self):
        if self.b == 0:
            return str(Fraction(self.a, self.q))
        r = f"sqrt({self.d0})"
        bs = r if abs(self.b) == 1 else f"{abs(self.b)}*{r}"
        if self.a == 0:
            s = ("-" if self.b < 0 else "") + bs
        else:
            s = f"{self.a} {'-' if self.b < 0 else '+'} {bs}"
        if self.q == 1:
            return s
        return f"({s})/{self.q}"


@dataclass
class RecognizedConstant:
    computed: PrecReal
    recognized: object | None  # Fraction, QuadraticConstant or None
    residual: mpmath.mpf | None
    confidence: float | None
    ok: bool
    kind: str = "rational"
    integral: bool = False
    reason: str = ""
    sqrt2_fits: dict = field(default_factory=dict)

    def record(self, prefix: str = "recognized") -> dict[str, str]:
        out = {f"{prefix}.kind": self.kind, f"{prefix}.ok": str(self.ok).lower()}
        if self.ok:
            out[f"{prefix}.value"] = str(self.recognized)
            out[f"{prefix}.residual"] = mpmath.nstr(self.residual, 3)
            out[f"{prefix}.confidence"] = f"{self.confidence:.3e}"
            if self.kind == "rational":
                out[f"{prefix}.integer"] = str(self.integral).lower()
        else:
            out[f"{prefix}.reason"] = self.reason
        for k, v in sorted(self.sqrt2_fits.items()):
            out[f"{prefix}.{k}"] = str(v) if v is not None else "none"
        return out


def _as_prec(x) -> PrecReal:
    return x if isinstance(x, PrecReal) else PrecReal.make(x, 128)


def _convergents(x: Fraction):
    h0, h1, k0, k1 = 0, 1, 1, 0
    while True:
        a = math.floor(x)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        yield Fraction(h1, k1)
        frac = x - a
        if frac == 0:
            return
        x = 1 / frac


def _rational_fit(v, D: int, tol) -> tuple[Fraction, mpmath.mpf] | None:
    with mpmath.workprec(256):
        exact = _mpf_fraction(v)
        for c in _convergents(exact):
            if c.denominator > D:
                return None
            r = abs(mpmath.mpf(v) - mpmath.mpf(c.numerator) / c.denominator)
            if r <= tol:
                return c, r
    return None


def _mpf_fraction(v) -> Fraction:
    sign, man, exp, _ = mpmath.mpf(v)._mpf_
    if not man:
        return Fraction(0)
    return (-1) ** sign * Fraction(int(man)) * (Fraction(2) ** int(exp))


SIDE_FIT_CONFIDENCE = 1e-3


def _resolved(residual, inv_granularity) -> bool:
    # side fits are only reported when far below the spacing of competing candidates
    return float(residual * inv_granularity) < SIDE_FIT_CONFIDENCE


def recognize_rational(x, D: int = 1000, tol: float | None = None,
                       sqrt2: bool = True) -> RecognizedConstant:
    """Smallest-denominator continued-fraction convergent within tol; failure is a value."""
    x = _as_prec(x)
    tol = mpmath.mpf(tol) if tol is not None else mpmath.mpf(10) ** -8
    if not mpmath.isfinite(x.value):
        return RecognizedConstant(x, None, None, None, False, reason="non-finite input")
    if tol <= 10 * x.err:
        return RecognizedConstant(x, None, None, None, False,
                                  reason=f"tolerance {mpmath.nstr(tol, 3)} not above 10 * errbound "
                                         f"{mpmath.nstr(10 * x.err, 3)}")
    fit = _rational_fit(x.value, D, tol)
    fits = {}
    if sqrt2:
        # the ratio may carry an undetermined sqrt(2); report both fits separately
        for name, y in (("sqrt2_times", x.value * mpmath.sqrt(2)), ("sqrt2_over", x.value / mpmath.sqrt(2))):
            f2 = _rational_fit(y, D, tol)
            fits[name] = f2[0] if f2 and _resolved(f2[1], 2 * f2[0].denominator ** 2) else None
    if fit is None:
        return RecognizedConstant(x, None, None, None, False,
                                  reason=f"no convergent with denominator <= {D} within tolerance",
                                  sqrt2_fits=fits)
    c, r = fit
    gran = mpmath.mpf(1) / (c.denominator ** 2 * 2)
    return RecognizedConstant(x, c, r, float(r / gran), True, "rational", c.denominator == 1,
                              sqrt2_fits=fits)


def _quadratic_fit(v, d0: int, bound: int, tol):
    best = None
    with mpmath.workprec(128):
        v = mpmath.mpf(v)
        s = mpmath.sqrt(d0)
        for q in range(1, bound + 1):
            for b in range(-bound, bound + 1):
                a = int(mpmath.nint(q * v - b * s))
                if abs(a) > bound * q:
                    continue
                r = abs(v - (a + b * s) / q)
                if r > tol:
                    continue
                g = math.gcd(math.gcd(a, b), q)
                cand = QuadraticConstant(a // g, b // g, q // g, d0)
                height = max(abs(cand.a), abs(cand.b), cand.q)
                key = (height, r)
                if best is None or key < best[0]:
                    best = (key, cand, r)
    return None if best is None else (best[1], best[2])


def recognize_quadratic(x, d0: int = 5, bound: int = 30, tol: float | None = None,
                        sqrt2: bool = True) -> RecognizedConstant:
    """Lowest-height (a + b sqrt(d0))/q within tol by exhaustive search over |b|, q <= bound."""
    x = _as_prec(x)
    tol = mpmath.mpf(tol) if tol is not None else mpmath.mpf(10) ** -8
    if tol <= 10 * x.err:
        return RecognizedConstant(x, None, None, None, False, kind="quadratic",
                                  reason="tolerance not above 10 * errbound")
    fit = _quadratic_fit(x.value, d0, bound, tol)
    fits = {}
    if sqrt2:
        for name, y in (("sqrt2_times", x.value * mpmath.sqrt(2)), ("sqrt2_over", x.value / mpmath.sqrt(2))):
            f2 = _quadratic_fit(y, d0, bound, tol)
            fits[name] = f2[0] if f2 and _resolved(f2[1], 2 * f2[0].q * (2 * bound + 1)) else None
    if fit is None:
        return RecognizedConstant(x, None, None, None, False, kind="quadratic",
                                  reason=f"no (a + b sqrt({d0}))/q with coefficients <= {bound}",
                                  sqrt2_fits=fits)
    c, r = fit
    gran = mpmath.mpf(1) / (2 * c.q * (2 * bound + 1))
    return RecognizedConstant(x, c, r, float(r / gran), True, "quadratic", c.b == 0 and c.q == 1,
                              sqrt2_fits=fits)


# --------------------------------------------------------------------------
# jobs and reports
# --------------------------------------------------------------------------

class StageError(RuntimeError):
    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"[{stage}] {type(exc).__name__}: {exc}")
        self.stage = stage
        self.cause = exc


@dataclass
class VerificationJob:
    d: int
    form: str
    forms_file: str | None = None
    unit: str | None = None  # "c1,c2,..." in alpha, or "logorbit:<path>"
    prec_bits: int = 128
    digits: int = 6
    cache_dir: str | None = None
    threads: int = 1
    denom_bound: int = 1000
    recognition: str = "auto"  # rational | quadratic | auto
    quad_bound: int = 30

    def validate(self):
        if self.forms_file and not Path(self.forms_file).exists():
            raise FileNotFoundError(self.forms_file)
        if self.unit and self.unit.startswith("logorbit:") and not Path(self.unit[9:]).exists():
            raise FileNotFoundError(self.unit[9:])
        fs = load_form(self.form, self.forms_file)
        classical_cusps(fs.level)  # square-free levels only
        make_field(self.d)
        if self.digits < 1 or self.prec_bits < 32:
            raise ValueError("digits >= 1 and prec_bits >= 32 required")
        if self.recognition not in ("auto", "rational", "quadratic"):
            raise ValueError(f"unknown recognition mode {self.recognition!r}")
        return fs


_JOB_KEYS = {"d": int, "form": str, "forms_file": str, "unit": str, "prec_bits": int,
             "digits": int, "cache_dir": str, "threads": int, "denom_bound": int,
             "recognition": str, "quad_bound": int}


def parse_job(path=None, text: str | None = None, overrides: dict | None = None) -> VerificationJob:
    """``key = value`` lines (# comments); relative paths resolve against the job file."""
    if text is None:
        text = Path(path).read_text()
    base = Path(path).parent if path else Path(".")
    kv: dict = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {n}: expected key = value")
        k, v = (t.strip() for t in line.split("=", 1))
        if k not in _JOB_KEYS:
            raise ValueError(f"line {n}: unknown key {k!r}")
        kv[k] = _JOB_KEYS[k](v)
    if os.environ.get(ENV_CACHE) and "cache_dir" not in kv:
        kv["cache_dir"] = os.environ[ENV_CACHE]
    if os.environ.get(ENV_THREADS) and "threads" not in kv:
        kv["threads"] = int(os.environ[ENV_THREADS])
    for k, v in (overrides or {}).items():
        if v is not None:
            kv[k] = v
    for k in ("forms_file",):
        if k in kv and not Path(kv[k]).is_absolute():
            kv[k] = str(base / kv[k])
    if "unit" in kv and kv["unit"].startswith("logorbit:"):
        p = Path(kv["unit"][9:])
        if not p.is_absolute():
            kv["unit"] = "logorbit:" + str(base / p)
    missing = {"d", "form"} - kv.keys()
    if missing:
        raise ValueError(f"job file lacks {sorted(missing)}")
    return VerificationJob(**kv)


class Report:
    """Ordered key=value lines; keys under ``time.`` carry wall-clock values."""

    def __init__(self):
        self.items: list[tuple[str, str]] = []
        self.status = 1

    def add(self, key: str, value):
        self.items.append((key, str(value)))

    def update(self, d: dict):
        for k, v in d.items():
            self.add(k, v)

    def get(self, key: str, default=None):
        for k, v in self.items:
            if k == key:
                return v
        return default

    def lines(self, timing: bool = True) -> list[str]:
        return [f"{k}={v}" for k, v in self.items if timing or not k.startswith("time.")]

    def numeric_fields(self) -> str:
        return "\n".join(self.lines(timing=False))

    def __str__(self):
        return "\n".join(self.lines())


def _fmt_c(z, digits: int = 12) -> str:
    z = complex(z)
    return f"{z.real:.{digits}g}{z.imag:+.{digits}g}i"


def _unit_log(job: VerificationJob, fs, prec: int) -> tuple[PrecReal, str]:
    spec = job.unit
    if spec and spec.startswith("logorbit:"):
        rep = fs.representation()
        mink: MinkowskiData = parse_logorbit_file(spec[9:], rep)
        if rep.m == 5:
            return d5_unit_log(rep, mink), f"logorbit({Path(spec[9:]).name})"
        return mink(rep.identity), f"logorbit({Path(spec[9:]).name})"
    coeffs = tuple(Fraction(c) for c in spec.split(",")) if spec else fs.unit
    if coeffs is None:
        raise ValueError(f"form {fs.label} has no default unit; set unit = ...")
    u = UnitVector(fs.poly, coeffs, prec)
    return u.log_abs(prec=prec), u.describe()


def _recognize(job: VerificationJob, fs, ratio: PrecReal) -> RecognizedConstant:
    mode = job.recognition
    if mode == "auto":
        mode = "quadratic" if fs.representation().m == 5 else "rational"
    tol = mpmath.mpf(10) ** (-(job.digits - 1))
    if mode == "quadratic":
        return recognize_quadratic(ratio, 5, job.quad_bound, tol)
    return recognize_rational(ratio, job.denom_bound, tol)


def _stage(name, fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage tag
        raise StageError(name, exc) from exc


def run_verification(job: VerificationJob) -> Report:
    """Integral over Gamma_0(N)\\H of the base change, divided by log|u|, recognized."""
    t0 = time.time()
    rep = Report()
    fs = _stage("job", job.validate)
    rep.update({"job.d": job.d, "job.form": fs.label, "job.level": fs.level,
                "job.prec_bits": job.prec_bits, "job.digits": job.digits})
    fld = _stage("field", make_field, job.d)
    sys = _stage("eigen", lambda: base_change(fs.eigensystem(), fld))
    t1 = time.time()
    res, exps = _stage("integral", period_integral, sys, None, job.prec_bits, job.digits,
                       None, job.threads)
    rep.add("time.integral", f"{time.time() - t1:.2f}")
    # coefficient cache: a_(m) at the cusp oo, persisted when a cache dir is set
    path = Path(job.cache_dir) / f"{fs.label}_d{job.d}.cache" if job.cache_dir else None
    cache = CoeffCache(path, fs.hash(job.d), job.d)
    mmax = max(c.m_max for c in res.cusps)
    _stage("cache", cache.rational_coefficients, sys, mmax)
    cache.flush()
    rep.update({"cache.entries": len(cache.entries), "cache.hits": cache.hits,
                "cache.misses": cache.misses})
    for e in exps:
        rep.add(f"cusp[{e.label}].widths", f"{e.h0},{e.h}")
        rep.add(f"cusp[{e.label}].lambda", _fmt_c(complex(e.lam)))
        rep.add(f"cusp[{e.label}].source", e.source)
        rep.add(f"cusp[{e.label}].head", " ".join(_fmt_c(v, 8) for v in e.values[:6]))
    rep.update(res.record())
    logu, udesc = _stage("unit", _unit_log, job, fs, job.prec_bits)
    rep.add("unit.expr", udesc)
    rep.add("unit.log_abs", logu.decimal(job.digits + 8))
    ratio = _stage("ratio", lambda: res.value / logu)
    rep.add("ratio.value", ratio.decimal(job.digits + 6))
    rep.add("ratio.errbound", mpmath.nstr(ratio.err, 3))
    rc = _stage("recognize", _recognize, job, fs, ratio)
    rep.update(rc.record())
    rep.add("status", "recognized" if rc.ok else "unrecognized")
    rep.add("time.total", f"{time.time() - t0:.2f}")
    rep.status = 0 if rc.ok else 2
    rep.recognized = rc
    rep.result = res
    return rep


def run_petersson_check(label: str, prec_bits: int = 128, digits: int = 6, threads: int = 1,
                        unit: str | None = None, forms_file: str | None = None,
                        denom_bound: int = 1000) -> Report:
    """<f0, f0> from all cusps of Gamma_0(N), log|u| and their recognized ratio."""
    t0 = time.time()
    rep = Report()
    fs = _stage("job", load_form, label, forms_file)
    rep.update({"job.form": fs.label, "job.level": fs.level, "job.prec_bits": prec_bits,
                "job.digits": digits})
    res, _ = _stage("petersson", petersson_classical, fs.eigensystem(), prec_bits, digits,
                    None, threads)
    rep.update(res.record())
    job = VerificationJob(1, label, forms_file, unit, prec_bits, digits)
    logu, udesc = _stage("unit", _unit_log, job, fs, prec_bits)
    rep.add("unit.expr", udesc)
    rep.add("unit.log_abs", logu.decimal(digits + 8))
    ratio = res.value / logu
    rep.add("ratio.value", ratio.decimal(digits + 6))
    rc = recognize_rational(ratio, denom_bound, mpmath.mpf(10) ** (-(digits - 1)))
    rep.update(rc.record())
    rep.add("status", "recognized" if rc.ok else "unrecognized")
    rep.add("time.total", f"{time.time() - t0:.2f}")
    rep.status = 0 if rc.ok else 2
    rep.recognized = rc
    rep.result = res
    return rep
