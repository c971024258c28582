from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from starkhmf.bignum import PrecReal
from starkhmf.verify import (QuadraticConstant, StageError, parse_job, recognize_quadratic,
                             recognize_rational, run_verification)


def test_rational_examples():
    assert recognize_rational(2.000000000001, 100, 1e-9).recognized == 2
    assert recognize_rational(-0.249999999998, 100, 1e-9).recognized == Fraction(-1, 4)
    rc = recognize_rational(0, 100, 1e-9)
    assert rc.ok and rc.recognized == 0 and rc.integral


def test_rational_failure_is_a_value():
    rc = recognize_rational(mpmath.pi, 100, 1e-12)
    assert not rc.ok and "denominator" in rc.reason
    noisy = PrecReal.make(2, 128, err=1e-6)
    rc = recognize_rational(noisy, 100, 1e-6)
    assert not rc.ok and "errbound" in rc.reason


def test_sqrt2_side_fits():
    rc = recognize_rational(mpmath.sqrt(2) * 3, 100, 1e-12)
    assert not rc.ok
    assert rc.sqrt2_fits["sqrt2_over"] == 3
    # a side fit is not reported for a generic rational
    rc = recognize_rational(Fraction(7, 3), 100, 1e-12)
    assert rc.ok and rc.sqrt2_fits["sqrt2_times"] is None


@pytest.mark.parametrize("x,text", [
    (1 - mpmath.sqrt(5) / 5, "(5 - sqrt(5))/5"),
    (5 - mpmath.sqrt(5), "5 - sqrt(5)"),
    (8 - 8 * mpmath.sqrt(5) / 5, "(40 - 8*sqrt(5))/5"),
    (0, "0"),
])
def test_quadratic_examples(x, text):
    rc = recognize_quadratic(x, 5, 30, 1e-9)
    assert rc.ok and str(rc.recognized) == text


@settings(max_examples=80, deadline=None)
@given(st.integers(-200, 200), st.integers(1, 200))
def test_rational_round_trip(a, b):
    x = Fraction(a, b)
    with mpmath.workprec(128):
        v = mpmath.mpf(a) / b
    rc = recognize_rational(PrecReal.make(x, 128), 200, 1e-20)
    assert rc.ok and rc.recognized == x


@settings(max_examples=60, deadline=None)
@given(st.integers(-20, 20), st.integers(-20, 20), st.integers(1, 20))
def test_quadratic_round_trip(a, b, q):
    c = QuadraticConstant(a, b, q)
    rc = recognize_quadratic(PrecReal.make(c.value(160), 160), 5, 20, 1e-25)
    assert rc.ok
    assert abs(rc.recognized.value(160) - c.value(160)) < 1e-30


def test_job_parsing(tmp_path, monkeypatch):
    monkeypatch.delenv("STARK_HMF_CACHE_DIR", raising=False)
    monkeypatch.delenv("STARK_HMF_THREADS", raising=False)
    p = tmp_path / "job.txt"
    p.write_text("# comment\nd = 13\nform = 23   # trailing\nprec_bits = 160\nunit = 1,-1,0\n")
    job = parse_job(p)
    assert (job.d, job.form, job.prec_bits, job.unit, job.threads) == (13, "23", 160, "1,-1,0", 1)
    monkeypatch.setenv("STARK_HMF_THREADS", "3")
    assert parse_job(p).threads == 3
    assert parse_job(p, overrides={"threads": 2, "digits": None}).threads == 2
    with pytest.raises(ValueError):
        parse_job(text="d = 5\n")
    with pytest.raises(ValueError):
        parse_job(text="d = 5\nform = 23\ncolour = red\n")
    with pytest.raises(ValueError):
        parse_job(text="d = 5\nform 23\n")


def test_job_validation_errors():
    with pytest.raises(StageError):
        run_verification(parse_job(text="d = 12\nform = 23\n"))
    with pytest.raises(StageError):
        run_verification(parse_job(text="d = 5\nform = 23\nunit = logorbit:/no/such/file\n"))


@pytest.fixture(scope="module")
def report23(tmp_path_factory):
    cache = tmp_path_factory.mktemp("cache")
    return run_verification(parse_job(text=f"d = 5\nform = 23\ncache_dir = {cache}\n")), cache


def test_report_level23(report23):
    rep, cache = report23
    assert rep.status == 0
    assert rep.get("recognized.value") == "2"
    assert rep.get("recognized.integer") == "true"
    assert rep.get("status") == "recognized"
    assert (cache / "23.1.b.a_d5.cache").exists()
    keys = [l.split("=", 1)[0] for l in rep.lines()]
    assert keys.index("job.d") < keys.index("integral.value") < keys.index("ratio.value")
    assert all(not l.startswith("time.") for l in rep.numeric_fields().splitlines())


def test_report_is_deterministic(report23):
    rep, cache = report23
    again = run_verification(parse_job(text=f"d = 5\nform = 23\ncache_dir = {cache}\n"))
    a = [l for l in rep.numeric_fields().splitlines() if not l.startswith("cache.")]
    b = [l for l in again.numeric_fields().splitlines() if not l.startswith("cache.")]
    assert a == b
    assert again.get("cache.misses") == "0"


def test_unrecognized_status():
    # u^3 gives the ratio 2/3, outside a denominator bound of 2
    rep = run_verification(parse_job(text="d = 5\nform = 23\nunit = 1,-1,1\ndenom_bound = 2\n"))
    assert rep.status == 2 and rep.get("recognized.ok") == "false"
    with pytest.raises(StageError, match="not a unit"):
        run_verification(parse_job(text="d = 5\nform = 23\nunit = 2,1\n"))


def test_logorbit_file_pipeline(tmp_path):
    # log-orbit of the quintic-field unit alpha, written in the file format
    from starkhmf.galois import d5_level47
    from starkhmf.stark import MinkowskiData, UnitVector
    rep = d5_level47()
    m = MinkowskiData.from_unit(rep, UnitVector(rep.poly, (1, 0)), prec=160)
    seen, rows = set(), ["precision 40"]
    for g in rep:
        if g.perm in seen:
            continue
        seen.update({g.perm, rep.mul(rep.c0, g).perm})
        rows.append(f"logorbit {g.name} {m(g).decimal(40)}")
    path = tmp_path / "orbit.txt"
    path.write_text("\n".join(rows) + "\n")
    rep_ = run_verification(parse_job(text=f"d = 5\nform = 47\ndigits = 6\nunit = logorbit:{path}\n"))
    assert rep_.status == 0
    assert rep_.get("recognized.kind") == "quadratic"
    assert rep_.get("recognized.value") == "(-2*sqrt(5))/5"
    assert rep_.get("unit.expr") == "logorbit(orbit.txt)"


def test_logorbit_file_needs_header(tmp_path):
    path = tmp_path / "orbit.txt"
    path.write_text("logorbit 1 0.5\n")
    with pytest.raises(StageError, match="precision"):
        run_verification(parse_job(text=f"d = 5\nform = 47\nunit = logorbit:{path}\n"))
