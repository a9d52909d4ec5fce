import numpy as np
import pytest

from offfsp.games import make_game


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["rps", "rps_asym", "kuhn", "large_kuhn", "leduc"])
def small_game(request):
    return make_game(request.param)


# -- acceptance summary: one pass/fail line per criterion --------------------------

_criteria = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        detail = dict(item.user_properties).get("detail", "")
        _criteria.append((mark.args[0], mark.args[1], rep.outcome, rep.duration, detail))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, outcome, duration, detail in sorted(_criteria):
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"[{status}] criterion {number}: {title} ({duration:.1f} s)"
        terminalreporter.write_line(f"{line}: {detail}" if detail else line)
