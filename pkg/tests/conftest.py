import os
import sys
import warnings

import pytest

HERE = os.path.dirname(__file__)
sys.path.insert(0, HERE)

FIXTURES = os.path.join(HERE, "fixtures")


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES, name)


@pytest.fixture
def hh_small():
    """Henon-Heiles with omega = (1, -sqrt(2)/2), R_I = 2, R_II = 5."""
    from birkhoff.models import henon_heiles
    from birkhoff.rigor import Interval

    return henon_heiles(1, -(Interval.point(2.0).sqrt() / 2), R_I=2, R_II=5)


@pytest.fixture(autouse=True)
def _quiet_scan_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="remainder still decreasing")
        yield


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        import criteria

        for mark in item.iter_markers("criterion"):
            criteria.TAGGED.setdefault(mark.args[0], []).append(rep.passed)


def pytest_terminal_summary(terminalreporter):
    import criteria

    if not criteria.VERDICTS and not criteria.TAGGED:
        return
    terminalreporter.section("acceptance criteria")
    for name in criteria.NAMES:
        terminalreporter.write_line(criteria.format_line(name))
