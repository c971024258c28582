"""stark-hmf command line.

Exit status: 0 when a constant is recognized (or a command succeeds), 2 when
recognition fails, 1 on any computational or usage error.
"""
from __future__ import annotations

import functools
import os
import sys
from fractions import Fraction

import click
import mpmath

from .verify import ENV_CACHE, ENV_THREADS, StageError, parse_job, run_petersson_check, run_verification

EXIT_OK, EXIT_ERROR, EXIT_UNRECOGNIZED = 0, 1, 2


def common(fn):
    """--prec-bits, --digits, --threads and --cache-dir on every subcommand."""
    @click.option("--prec-bits", type=int, default=None, help="Working precision in bits.")
    @click.option("--digits", type=int, default=None, help="Target decimal digits.")
    @click.option("--threads", type=int, default=None, envvar=ENV_THREADS,
                  help="Worker processes for the Bessel series.")
    @click.option("--cache-dir", type=click.Path(file_okay=False), default=None, envvar=ENV_CACHE,
                  help="Directory for coefficient caches.")
    @functools.wraps(fn)
    def wrapper(*a, **kw):
        try:
            return fn(*a, **kw)
        except click.exceptions.Exit:
            raise
        except click.ClickException:
            raise
        except StageError as exc:
            click.echo(f"error={exc}", err=True)
            sys.exit(EXIT_ERROR)
        except Exception as exc:  # noqa: BLE001 - every failure maps to exit status 1
            click.echo(f"error={type(exc).__name__}: {exc}", err=True)
            sys.exit(EXIT_ERROR)
    return wrapper


def _system(form: str, d: int | None, forms_file=None):
    from .hmf import base_change, load_form
    from .quadfield import make_field
    fs = load_form(form, forms_file)
    sys0 = fs.eigensystem()
    if d in (None, 1):
        return fs, sys0
    return fs, base_change(sys0, make_field(d))


def _emit(lines):
    for ln in lines:
        click.echo(ln)


class _Group(click.Group):
    def main(self, *a, **kw):
        # usage errors exit with 1: status 2 is reserved for recognition failures
        try:
            return super().main(*a, standalone_mode=False, **kw)
        except click.exceptions.Abort:
            click.echo("aborted", err=True)
            sys.exit(EXIT_ERROR)
        except click.ClickException as exc:
            exc.show()
            sys.exit(EXIT_ERROR)


@click.group(cls=_Group)
@click.version_option(package_name="artifact")
def main():
    """Stark units, base-change period integrals and recognized constants."""


@main.command()
@click.argument("job_file", type=click.Path(exists=True, dir_okay=False))
@common
def verify(job_file, prec_bits, digits, threads, cache_dir):
    """Run a verification job file and print its key=value report."""
    job = parse_job(job_file, overrides={"prec_bits": prec_bits, "digits": digits,
                                         "threads": threads, "cache_dir": cache_dir})
    rep = run_verification(job)
    _emit(rep.lines())
    sys.exit(rep.status)


@main.command()
@click.option("--form", required=True, help="Form label (or level) from the form table.")
@click.option("--d", "d", type=int, default=None, help="Real quadratic field Q(sqrt d); omit for Q.")
@click.option("--cusp", "cusps", multiple=True, help="Cusp labels (default: all).")
@click.option("--m", "M", type=int, default=20, show_default=True, help="Number of coefficients.")
@click.option("--forms-file", type=click.Path(exists=True), default=None)
@common
def qexp(form, d, cusps, M, forms_file, prec_bits, digits, threads, cache_dir):
    """Coefficients at the cusps of Gamma_0(N): cusp=<s> m=<int> re=<dec> im=<dec>."""
    from .cusps import classical_cusp_expansion, classical_cusps
    _, sys_ = _system(form, d, forms_file)
    prec = prec_bits or 128
    dg = digits or 15
    labels = [l for l, _ in classical_cusps(sys_.level)]
    for lab in (cusps or labels):
        e = classical_cusp_expansion(sys_, lab, None, M, prec)
        for w in e.warnings:
            click.echo(f"# {w}", err=True)
        for m, v in enumerate(e.values, 1):
            z = v.value
            click.echo(f"cusp={e.label} m={m} re={mpmath.nstr(mpmath.re(z), dg, min_fixed=-1, max_fixed=1)}"
                       f" im={mpmath.nstr(mpmath.im(z), dg, min_fixed=-1, max_fixed=1)}")


@main.command()
@click.option("--form", required=True)
@click.option("--d", "d", type=int, required=True)
@click.option("--forms-file", type=click.Path(exists=True), default=None)
@common
def integral(form, d, forms_file, prec_bits, digits, threads, cache_dir):
    """Period integral of the base change to Q(sqrt d) over Gamma_0(N)."""
    from .integral import period_integral
    _, sys_ = _system(form, d, forms_file)
    res, _ = period_integral(sys_, None, prec_bits, digits or 6, None, threads or 1)
    _emit(f"{k}={v}" for k, v in res.record().items())
    click.echo(f"time.integral={res.seconds:.2f}")


@main.command()
@click.option("--form", required=True)
@click.option("--unit", "unit", default=None, help="Unit as comma-separated coefficients in alpha.")
@click.option("--forms-file", type=click.Path(exists=True), default=None)
@common
def petersson(form, unit, forms_file, prec_bits, digits, threads, cache_dir):
    """<f0, f0> over Gamma_0(N), log|u| and their recognized ratio."""
    rep = run_petersson_check(form, prec_bits or 128, digits or 6, threads or 1, unit, forms_file)
    _emit(rep.lines())
    sys.exit(rep.status)


@main.command()
@click.option("--form", default=None, help="Take poly and unit from the form table.")
@click.option("--poly", default=None, help="Defining polynomial, leading coefficient first.")
@click.option("--height", type=int, default=4, show_default=True)
@click.option("--unit-file", type=click.Path(exists=True), default=None)
@common
def units(form, poly, height, unit_file, prec_bits, digits, threads, cache_dir):
    """Unit records: expression, norm and log|u| at the real embedding."""
    from .hmf import load_form
    from .stark import UnitVector, fundamental_unit_from_search, parse_unit_file
    prec = prec_bits or 128
    dg = digits or 15
    us = []
    if unit_file:
        us = parse_unit_file(unit_file, prec)
    else:
        if form:
            fs = load_form(form)
            P = fs.poly
            if fs.unit:
                us.append(("table", UnitVector(P, fs.unit, prec)))
        elif poly:
            P = tuple(int(c) for c in poly.split(","))
        else:
            raise click.UsageError("give --form, --poly or --unit-file")
        us.append(("search", fundamental_unit_from_search(P, height, prec)))
    for item in us:
        tag, u = item if isinstance(item, tuple) else ("file", item)
        click.echo(f"unit source={tag} poly={','.join(map(str, u.poly))} expr={u.describe().replace(' ', '')}"
                   f" norm={u.norm()} log_abs={u.log_abs(prec=prec).decimal(dg)}")


@main.command()
@click.option("--form", required=True)
@click.option("--d", "d", type=int, required=True)
@click.option("--p", "p", type=int, required=True)
@click.option("--n", "n", type=int, default=1, show_default=True)
@click.option("--count", type=int, default=5, show_default=True)
@click.option("--bound", type=int, default=100000, show_default=True)
@common
def twprimes(form, d, p, n, count, bound, prec_bits, digits, threads, cache_dir):
    """Taylor-Wiles primes: records 'q Q-gen alpha beta'."""
    from .modp import find_tw_primes
    _, sys_ = _system(form, d)
    for tw in find_tw_primes(sys_, p, n, count, bound):
        click.echo(tw.record())


@main.command()
@click.option("--form", default=None, help="Reduce the form's table unit.")
@click.option("--unit-file", type=click.Path(exists=True), default=None)
@click.option("--q", "q", type=int, required=True)
@click.option("--p", "p", type=int, required=True)
@click.option("--n", "n", type=int, default=1, show_default=True)
@click.option("--degree", type=int, default=None, help="Residue degree of the prime above q.")
@click.option("--root", default=None, help="Root of the polynomial in the residue field (c0,c1).")
@common
def reduce(form, unit_file, q, p, n, degree, root, prec_bits, digits, threads, cache_dir):
    """Discrete logs of unit reductions in the order p^n part of the residue field."""
    from .hmf import load_form
    from .modp import reduce_unit, residue_choice
    from .stark import UnitVector, parse_unit_file
    if unit_file:
        us = parse_unit_file(unit_file)
    elif form:
        fs = load_form(form)
        us = [UnitVector(fs.poly, fs.unit)]
    else:
        raise click.UsageError("give --form or --unit-file")
    rt = None
    if root is not None:
        parts = [int(Fraction(x)) for x in root.split(",")]
        rt = parts[0] if len(parts) == 1 else parts
    for u in us:
        ch = residue_choice(u.poly, q, degree, rt)
        r = reduce_unit(u, ch, p, n)
        click.echo(f"unit={r.unit.replace(' ', '')} {ch.describe()} p={p} n={n} order={r.order} "
                   f"reduced={r.reduced} dlog={r.value} gen={r.generator}")


if __name__ == "__main__":  # pragma: no cover
    main()
