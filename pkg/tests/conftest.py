import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rsbesov.wavelets import build_basis, daubechies_filter

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def d3():
    return daubechies_filter(3)


@pytest.fixture(scope="session")
def basis3():
    return build_basis(3, (1,), 12)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# --------------------------------------------------------------------------
# acceptance summary: tests marked criterion(number, title) get one line each

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): an acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    number, title = mark.args
    detail = "; ".join(v for k, v in item.user_properties if k == "detail")
    if number in _CRITERIA and not _CRITERIA[number][1]:
        return
    _CRITERIA[number] = (title, rep.passed, detail if rep.passed else rep.longreprtext.splitlines()[-1][:160])


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}]")
