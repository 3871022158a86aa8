from collections import OrderedDict
from pathlib import Path

import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=20, deadline=None)
hypothesis.settings.load_profile("ci")

np.seterr(all="raise", under="ignore")

ROOT = Path(__file__).resolve().parents[1]
TOY = ROOT / "src" / "bayes_rerank" / "data" / "toy"
GOLDEN = ROOT / "tests" / "data" / "golden"

_criteria = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    crit = getattr(report, "_criterion", None)
    if crit is None or (report.when != "call" and not report.failed):
        return
    _criteria[crit] = _criteria.get(crit, True) and report.passed


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result()._criterion = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), ok in sorted(_criteria.items()):
        terminalreporter.write_line(f"AC{number:<3} {'PASS' if ok else 'FAIL'}  {title}")


@pytest.fixture
def toy_dir():
    return TOY


@pytest.fixture
def golden_dir():
    return GOLDEN
