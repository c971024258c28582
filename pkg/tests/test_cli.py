import re

import pytest
from click.testing import CliRunner

from starkhmf.cli import main


def _run(args, env=None):
    r = CliRunner()
    return r.invoke(main, args, env=env or {}, catch_exceptions=False)


def test_version():
    res = _run(["--version"])
    assert res.exit_code == 0 and "0.1.0" in res.output


def test_usage_error_exits_one():
    assert _run(["integral", "--d", "5"]).exit_code == 1
    assert _run(["no-such-command"]).exit_code == 1


def test_verify_ok(tmp_path):
    job = tmp_path / "job.txt"
    job.write_text("d = 5\nform = 23\n")
    res = _run(["verify", str(job), "--cache-dir", str(tmp_path / "c")])
    assert res.exit_code == 0
    assert "recognized.value=2" in res.output
    assert (tmp_path / "c" / "23.1.b.a_d5.cache").exists()


def test_verify_unrecognized_exit_two(tmp_path):
    job = tmp_path / "job.txt"
    job.write_text("d = 5\nform = 23\nunit = 1,-1,1\ndenom_bound = 2\n")
    assert _run(["verify", str(job)]).exit_code == 2


def test_verify_bad_job_exit_one(tmp_path):
    job = tmp_path / "job.txt"
    job.write_text("d = 12\nform = 23\n")
    res = _run(["verify", str(job)])
    assert res.exit_code == 1


def test_qexp_lines():
    res = _run(["qexp", "--form", "23", "--d", "5", "--cusp", "oo", "--m", "4"])
    assert res.exit_code == 0
    lines = res.output.strip().splitlines()
    assert len(lines) == 4
    assert re.fullmatch(r"cusp=oo m=1 re=\S+ im=\S+", lines[0])


def test_units_and_reduce():
    res = _run(["units", "--form", "23"])
    assert res.exit_code == 0 and "expr=a^2-a" in res.output and "norm=1" in res.output
    res = _run(["reduce", "--form", "23", "--q", "11", "--p", "5"])
    assert res.exit_code == 0 and "dlog=4" in res.output


def test_twprimes():
    res = _run(["twprimes", "--form", "23", "--d", "5", "--p", "5", "--count", "2"])
    assert res.exit_code == 0
    assert [l.split()[0] for l in res.output.strip().splitlines()] == ["11", "31"]


def test_petersson():
    res = _run(["petersson", "--form", "23"])
    assert res.exit_code == 0 and "recognized.value=3" in res.output


def test_threads_env(tmp_path):
    job = tmp_path / "job.txt"
    job.write_text("d = 5\nform = 23\n")
    res = _run(["verify", str(job)], env={"STARK_HMF_THREADS": "2"})
    assert res.exit_code == 0
