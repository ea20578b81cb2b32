import pytest
from hypothesis import HealthCheck, settings

from lfpseudo.view_grid import corner_geometry, default_geometry

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def geom13():
    return default_geometry()


@pytest.fixture(scope="session")
def geom7():
    return corner_geometry(7)


@pytest.fixture(scope="session")
def pocmap13(geom13):
    from lfpseudo.view_grid import assign_poc

    return assign_poc(geom13)


ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line: call with (number, ok, detail)."""

    def record(number, ok, detail):
        line = f"AC{number} {'PASS' if ok else 'FAIL'}: {detail}"
        ACCEPTANCE[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
