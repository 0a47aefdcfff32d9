import numpy as np
import pytest
from scipy.stats import unitary_group

from spingates.spin_model import TWO_PI, SystemParams


@pytest.fixture
def params():
    return SystemParams()


@pytest.fixture
def bare_params():
    """Electron only: no hyperfine coupling and no nuclear Zeeman term."""
    return SystemParams(TWO_PI * 3000.0, 0.0, 0.0, 0.0, TWO_PI * 15.0)


def random_su2(rng):
    return unitary_group.rvs(2, random_state=rng)


def random_local(rng):
    return np.kron(random_su2(rng), random_su2(rng))


# acceptance summary: one line per criterion, collected from tests marked ``criterion``
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    failed = call.excinfo is not None and not call.excinfo.errisinstance(pytest.skip.Exception)
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": True, "ran": False})
    if call.when == "call":
        entry["ran"] = True
    if failed:
        entry["passed"] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        status = "PASS" if entry["passed"] and entry["ran"] else ("FAIL" if entry["ran"] or not entry["passed"]
                                                                  else "NOT RUN")
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {entry['title']}")
