"""Hecke eigensystems and Fourier coefficients of (Hilbert) newforms.

Coefficients are indexed by ideals.  Prime eigenvalues come from an Artin
representation, from base change of a system over Q, or from an explicit table;
prime powers follow the Euler factor

    1 - a_P X + chi(P) N(P)^(k-1) X^2,

and coefficients are multiplicative over coprime ideals.
"""
from __future__ import annotations

import hashlib
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
from sympy import factorint, isprime

from .galois import RAMIFIED, ArtinRep, CycInt, catalog, trace_of_frobenius
from .quadfield import PrimeIdeal, QuadField, QuadInt, kronecker, make_field

__all__ = [
    "MissingData", "DirichletCharacter", "EigenSystem", "FormSpec", "CoeffCache",
    "eigen_from_artin", "base_change", "coefficient", "parse_form_file", "load_form",
    "builtin_forms", "SpfSieve",
]

DATA_DIR = Path(__file__).with_name("data")


class MissingData(KeyError):
    pass


# --------------------------------------------------------------------------
# characters
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DirichletCharacter:
    """n -> kronecker(d0, n) (d0 a fundamental discriminant), or the trivial character."""

    d0: int = 1

    @property
    def modulus(self) -> int:
        return abs(self.d0)

    def __call__(self, n: int) -> int:
        n = int(n)
        if self.d0 == 1:
            return 1
        return int(kronecker(self.d0, n))


# --------------------------------------------------------------------------
# factorization helpers
# --------------------------------------------------------------------------

class SpfSieve:
    """Smallest-prime-factor table for fast repeated factorization."""

    def __init__(self, n: int):
        n = max(int(n), 2)
        spf = np.zeros(n + 1, dtype=np.int64)
        for p in range(2, math.isqrt(n) + 1):
            if spf[p] == 0:
                sl = spf[p * p::p]
                sl[sl == 0] = p
        self.n = n
        self._spf = spf

    def factor(self, m: int) -> dict[int, int]:
        if m > self.n:
            return dict(factorint(m))
        out: dict[int, int] = {}
        spf = self._spf
        while m > 1:
            p = int(spf[m]) or m
            out[p] = out.get(p, 0) + 1
            m //= p
        return out


# --------------------------------------------------------------------------
# eigensystems
# --------------------------------------------------------------------------

class EigenSystem:
    """Hecke eigenvalues of a normalized newform over Q (``fld=None``) or a real quadratic field.

    ``prime_eigen`` maps a prime (int p, or a PrimeIdeal) to a CycInt;
    ``nebentypus`` is evaluated on integers (over Q) or on O_F elements, and is
    zero on elements not coprime to the level.
    """

    def __init__(self, fld: QuadField | None, level: int, weight: int,
                 prime_eigen: Callable, nebentypus: Callable, label: str = "",
                 source: str = "table", symmetric: bool = False, parent=None,
                 level_ideal_gen: QuadInt | None = None, prime_data: Callable | None = None):
        self.fld = fld
        self.level = int(level)
        self.weight = int(weight)
        self._prime_eigen = prime_eigen
        self.nebentypus = nebentypus
        self.label = label
        self.source = source
        # symmetric: a_P depends only on (p, residue degree), as for base change
        self.symmetric = symmetric
        self.parent = parent
        # optional (p, splitting kind) -> (a_P, chi(P) N(P)^(k-1)) for symmetric systems
        self.prime_data = prime_data
        self._ap: dict = {}
        self._pp: dict = {}
        self._lock = threading.Lock()
        self.level_primes = sorted(factorint(self.level))

    def __repr__(self):
        where = "Q" if self.fld is None else f"Q(sqrt {self.fld.d})"
        return f"EigenSystem({self.label or '?'} over {where}, level {self.level}, weight {self.weight})"

    # primes -------------------------------------------------------------
    def _pkey(self, P):
        return P if isinstance(P, int) else P.key()

    def a_prime(self, P) -> CycInt:
        k = self._pkey(P)
        v = self._ap.get(k)
        if v is None:
            v = self._prime_eigen(P)
            if not isinstance(v, CycInt):
                v = CycInt(v)
            with self._lock:
                self._ap[k] = v
        return v

    def prime_norm(self, P) -> int:
        return P if isinstance(P, int) else P.norm

    def chi_prime(self, P) -> CycInt:
        """chi(P): the nebentypus at a generator (zero if P divides the level)."""
        if isinstance(P, int):
            v = self.nebentypus(P)
        else:
            v = self.nebentypus(P.gen)
        return v if isinstance(v, CycInt) else CycInt(v)

    def a_prime_power(self, P, r: int) -> CycInt:
        k = (self._pkey(P), r)
        v = self._pp.get(k)
        if v is not None:
            return v
        if r == 0:
            v = CycInt(1)
        elif r == 1:
            v = self.a_prime(P)
        else:
            a = self.a_prime(P)
            c = self.chi_prime(P) * (self.prime_norm(P) ** (self.weight - 1))
            v = a * self.a_prime_power(P, r - 1) - c * self.a_prime_power(P, r - 2)
        with self._lock:
            self._pp[k] = v
        return v

    # ideals -------------------------------------------------------------
    def factor(self, nu) -> list[tuple[object, int]]:
        """Prime factorization of the ideal (nu)."""
        if self.fld is None:
            n = int(nu)
            if n <= 0:
                raise ValueError("index must be a positive integer")
            return sorted(factorint(n).items())
        x = nu if isinstance(nu, QuadInt) else self.fld(nu)
        return self.fld.factor(x)

    def factor_rational(self, m: int) -> list[tuple[object, int]]:
        """Factorization of the ideal m O_F for a positive integer m."""
        if self.fld is None:
            return sorted(factorint(m).items())
        out = []
        for p, e in sorted(factorint(m).items()):
            for P in self.fld.primes_above(p):
                out.append((P, 2 * e if P.kind == "ramified" else e))
        return out

    def coefficient_of_factorization(self, fac: Iterable[tuple[object, int]]) -> CycInt:
        res = CycInt(1)
        for P, e in fac:
            res = res * self.a_prime_power(P, e)
            if res.is_zero():
                return res
        return res

    def coefficient(self, nu) -> CycInt:
        """a_(nu) for a positive integer (over Q), or a nonzero element/ideal of O_F."""
        if self.fld is not None and hasattr(nu, "gen") and hasattr(nu, "norm"):
            nu = nu.gen
        if self.fld is None or isinstance(nu, QuadInt):
            return self.coefficient_of_factorization(self.factor(nu))
        return self.coefficient_of_factorization(self.factor_rational(int(nu)))

    def coefficient_rational(self, m: int) -> CycInt:
        """a_(m) for the ideal generated by the rational integer m."""
        return self.coefficient_of_factorization(self.factor_rational(int(m)))

    def coefficients_rational(self, M: int, sieve: SpfSieve | None = None) -> list[CycInt]:
        """[a_(1), ..., a_(M)] for rational indices."""
        sieve = sieve or SpfSieve(M)
        out = []
        for m in range(1, M + 1):
            fac = []
            for p, e in sorted(sieve.factor(m).items()):
                if self.fld is None:
                    fac.append((p, e))
                else:
                    for P in self.fld.primes_above(p):
                        fac.append((P, 2 * e if P.kind == "ramified" else e))
            out.append(self.coefficient_of_factorization(fac))
        return out

    # element coefficients in bulk ----------------------------------------
    def coefficients_of_elements(self, A: np.ndarray, B: np.ndarray,
                                 sieve: SpfSieve | None = None) -> np.ndarray:
        """complex(a_(a + b omega)) for integer arrays A, B (nonzero elements)."""
        fld = self.fld
        t, nn = int(fld.omega_trace), int(fld.omega_norm)
        norms = np.abs(A * A + t * A * B + nn * B * B)
        g = np.gcd(A, B)
        sieve = sieve or SpfSieve(int(norms.max()))
        out = np.zeros(len(A), dtype=complex)
        if self.symmetric:
            return self._symmetric_values(norms, g, sieve, out)
        memo: dict = {}
        cval: dict = {}
        for i in range(len(A)):
            n = int(norms[i])
            if self.symmetric:
                key = (n, int(g[i]))
            else:
                key = (int(A[i]), int(B[i]))
            v = memo.get(key)
            if v is None:
                c = self._element_coefficient(int(A[i]), int(B[i]), n, sieve)
                ck = c.c if not c.is_rational() else (c.c[0],)
                v = cval.get(ck)
                if v is None:
                    v = complex(c)
                    cval[ck] = v
                memo[key] = v
            out[i] = v
        return out

    def _symmetric_values(self, norms, g, sieve: SpfSieve, out: np.ndarray) -> np.ndarray:
        # a_P depends only on p and the splitting type, so a_(nu) is a function of
        # (N nu, content of nu); work in complex floats with cached prime powers
        fld = self.fld
        disc = fld.d if fld.d % 4 == 1 else 4 * fld.d
        kinds: dict = {}
        pp: dict = {}

        def kind_of(p: int) -> str:
            kd = kinds.get(p)
            if kd is None:
                kd = {1: "split", -1: "inert", 0: "ramified"}[kronecker(disc, p)]
                kinds[p] = kd
            return kd

        def val(p: int, r: int) -> complex:
            ent = pp.get(p)
            if ent is None:
                if self.prime_data is not None:
                    a, c = self.prime_data(p, kind_of(p))
                else:
                    P = fld.split_prime(p).primes[0]
                    a, c = self.a_prime(P), self.chi_prime(P) * P.norm ** (self.weight - 1)
                ent = pp[p] = (complex(a), complex(c), [1 + 0j, complex(a)])
            a, c, vals = ent
            while len(vals) <= r:
                vals.append(a * vals[-1] - c * vals[-2])
            return vals[r]

        memo: dict = {}
        for i, (n, gi) in enumerate(zip(norms.tolist(), g.tolist())):
            key = (n, abs(gi))
            v = memo.get(key)
            if v is None:
                v = 1.0 + 0j
                for p, e in sieve.factor(n).items():
                    kind = kind_of(p)
                    if kind == "inert":
                        v *= val(p, e // 2)
                    elif kind == "ramified":
                        v *= val(p, e)
                    else:
                        k = 0
                        gg = abs(gi)
                        while gg % p == 0:
                            gg //= p
                            k += 1
                        v *= val(p, e - k) * val(p, k)
                    if v == 0:
                        break
                memo[key] = v
            out[i] = v
        return out

    def _element_coefficient(self, a: int, b: int, n: int, sieve: SpfSieve) -> CycInt:
        fld = self.fld
        fac = []
        for p, e in sorted(sieve.factor(n).items()):
            rec = fld.split_prime(p)
            if rec.kind == "inert":
                fac.append((rec.primes[0], e // 2))
            elif rec.kind == "ramified":
                fac.append((rec.primes[0], e))
            else:
                # content p^k goes to both primes, the rest to the one dividing nu
                k = 0
                aa, bb = a, b
                while aa % p == 0 and bb % p == 0:
                    aa //= p
                    bb //= p
                    k += 1
                rest = e - 2 * k
                P0, P1 = rec.primes
                if rest and (aa + bb * P0.root) % p == 0:
                    fac += [(P0, k + rest), (P1, k)]
                else:
                    fac += [(P0, k), (P1, k + rest)]
        return self.coefficient_of_factorization(fac)

    def description(self) -> str:
        return f"{self.label}|{self.level}|{self.weight}|{self.source}|{self.fld.d if self.fld else 1}"


# --------------------------------------------------------------------------
# constructors
# --------------------------------------------------------------------------

def eigen_from_artin(rep: ArtinRep, level: int, chi: DirichletCharacter,
                     ramified: dict[int, CycInt] | None = None, label: str = "",
                     weight: int = 1) -> EigenSystem:
    """Weight one system over Q: a_p = Tr rho(Frob_p), level primes from ``ramified``."""
    ramified = {int(p): (v if isinstance(v, CycInt) else CycInt(v)) for p, v in (ramified or {}).items()}

    def ap(p: int) -> CycInt:
        if p in ramified:
            return ramified[p]
        t = trace_of_frobenius(rep, p)
        if t is RAMIFIED:
            raise MissingData(f"eigenvalue at ramified prime {p} missing from the form data")
        return t

    def neb(n) -> int:
        return chi(int(n))

    return EigenSystem(None, level, weight, ap, neb, label=label, source=f"artin:{rep.name}")


def base_change(sys0: EigenSystem, fld: QuadField) -> EigenSystem:
    """Base change to F: split/ramified P get a_p, inert (p) gets a_p^2 - 2 chi(p) p^(k-1)."""
    if sys0.fld is not None:
        raise ValueError("base change starts from a system over Q")
    k = sys0.weight

    def ap(P: PrimeIdeal) -> CycInt:
        a = sys0.a_prime(P.p)
        if P.kind == "inert":
            return a * a - 2 * sys0.chi_prime(P.p) * (P.p ** (k - 1))
        return a

    def neb(x) -> CycInt:
        n = int(x.norm()) if isinstance(x, QuadInt) else int(x) ** 2
        return CycInt(sys0.nebentypus(n))

    def data(p: int, kind: str):
        a = sys0.a_prime(p)
        c = sys0.chi_prime(p)
        if kind == "inert":
            return a * a - 2 * c * (p ** (k - 1)), c * c * (p ** (2 * (k - 1)))
        return a, c * (p ** (k - 1))

    return EigenSystem(fld, sys0.level, k, ap, neb, label=sys0.label, source="base-change",
                       symmetric=True, parent=sys0, prime_data=data)


def coefficient(sys: EigenSystem, nu) -> CycInt:
    return sys.coefficient(nu)


# --------------------------------------------------------------------------
# form descriptions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FormSpec:
    label: str
    level: int
    weight: int
    char: int
    poly: tuple[int, ...]
    ramified: tuple[tuple[int, str], ...]
    rep: str = ""
    unit: tuple[int, ...] | None = None

    def representation(self) -> ArtinRep:
        name = self.rep or ("S3reg" if len(self.poly) == 4 else "")
        if not name:
            raise ValueError(f"form {self.label}: cannot infer a representation from poly")
        return catalog(name, self.poly if name == "S3reg" else None)

    def eigensystem(self) -> EigenSystem:
        ram = {p: CycInt.parse(v) for p, v in self.ramified}
        return eigen_from_artin(self.representation(), self.level, DirichletCharacter(self.char),
                                ram, self.label, self.weight)

    def hash(self, d: int = 1) -> str:
        s = f"{self.label};{self.level};{self.weight};{self.char};{self.poly};{self.ramified};{self.rep};{d}"
        return hashlib.sha256(s.encode()).hexdigest()[:16]


def parse_form_line(line: str) -> FormSpec:
    """``form <label> level=<N> weight=<k> char=<d0> poly=<c,..> [rep=..] [unit=..] ramified: p=v ...``"""
    head, _, ram = line.partition("ramified:")
    toks = head.split()
    if not toks or toks[0] != "form":
        raise ValueError(f"not a form record: {line!r}")
    label = toks[1]
    kv = dict(t.split("=", 1) for t in toks[2:])
    ramified = tuple(sorted((int(p), v) for p, v in (t.split("=", 1) for t in ram.split())))
    return FormSpec(label, int(kv["level"]), int(kv.get("weight", 1)), int(kv["char"]),
                    tuple(int(c) for c in kv["poly"].split(",")), ramified, kv.get("rep", ""),
                    tuple(int(c) for c in kv["unit"].split(",")) if "unit" in kv else None)


def parse_form_file(path) -> dict[str, FormSpec]:
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            fs = parse_form_line(line)
            out[fs.label] = fs
    return out


@lru_cache(maxsize=None)
def builtin_forms() -> dict[str, FormSpec]:
    return parse_form_file(DATA_DIR / "forms.txt")


def load_form(label: str, path=None) -> FormSpec:
    forms = parse_form_file(path) if path else builtin_forms()
    if label not in forms:
        # allow the bare level as a shorthand
        for fs in forms.values():
            if fs.label.split(".")[0] == label:
                return fs
        raise KeyError(f"unknown form {label!r}")
    return forms[label]


# --------------------------------------------------------------------------
# persistent cache
# --------------------------------------------------------------------------

class CoeffCache:
    """Coefficients keyed by (ideal norm, canonical generator), persisted as text.

    File layout: a header ``cachev1 <form-hash> <d>`` then tab-separated records
    ``norm gen_a gen_b coeff_0,coeff_1,...``.  A header mismatch discards the
    file's contents.  Writes go through one lock; ``flush`` rewrites the file in
    sorted order so identical contents give identical bytes.
    """

    def __init__(self, path, form_hash: str, d: int):
        self.path = Path(path) if path else None
        self.form_hash = form_hash
        self.d = int(d)
        self.entries: dict[tuple[int, int, int], CycInt] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        self._dirty = False
        if self.path and self.path.exists():
            self._load()

    def _load(self):
        lines = self.path.read_text().splitlines()
        if not lines or lines[0].split() != ["cachev1", self.form_hash, str(self.d)]:
            return
        for ln in lines[1:]:
            if not ln.strip():
                continue
            n, a, b, c = ln.split("\t")
            self.entries[(int(n), int(a), int(b))] = CycInt.parse(c)

    def get(self, key):
        v = self.entries.get(key)
        if v is None:
            self.misses += 1
        else:
            self.hits += 1
        return v

    def put(self, key, value: CycInt):
        with self._lock:
            if key not in self.entries:
                self.entries[key] = value
                self._dirty = True

    def flush(self):
        if not self.path or not self._dirty:
            return
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            rows = [f"cachev1 {self.form_hash} {self.d}"]
            for (n, a, b) in sorted(self.entries):
                rows.append(f"{n}\t{a}\t{b}\t{self.entries[(n, a, b)].serialize()}")
            tmp = self.path.with_suffix(".tmp")
            tmp.write_text("\n".join(rows) + "\n")
            tmp.replace(self.path)
            self._dirty = False

    def rational_coefficients(self, sys: EigenSystem, M: int) -> list[CycInt]:
        """a_(m), m = 1..M, through the cache (generator of (m) is m itself)."""
        out: list[CycInt | None] = [None] * M
        todo = []
        for m in range(1, M + 1):
            n = m * m if sys.fld is not None else m
            v = self.get((n, m, 0))
            if v is None:
                todo.append(m)
            out[m - 1] = v
        if todo:
            sieve = SpfSieve(M)
            for m in todo:
                fac = []
                for p, e in sorted(sieve.factor(m).items()):
                    if sys.fld is None:
                        fac.append((p, e))
                    else:
                        for P in sys.fld.primes_above(p):
                            fac.append((P, 2 * e if P.kind == "ramified" else e))
                v = sys.coefficient_of_factorization(fac)
                n = m * m if sys.fld is not None else m
                self.put((n, m, 0), v)
                out[m - 1] = v
        return out  # type: ignore[return-value]
