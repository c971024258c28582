import pytest

from starkhmf.hmf import base_change, load_form
from starkhmf.quadfield import make_field


@pytest.fixture(scope="session")
def q5():
    return make_field(5)


@pytest.fixture(scope="session")
def q13():
    return make_field(13)


@pytest.fixture(scope="session")
def f23():
    return load_form("23").eigensystem()


@pytest.fixture(scope="session")
def f31():
    return load_form("31").eigensystem()


@pytest.fixture(scope="session")
def bc23(q5, f23):
    return base_change(f23, q5)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
