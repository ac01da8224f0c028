import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

GOLDEN = Path(__file__).parent / "golden"

_acceptance = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    marker = report.user_properties and dict(report.user_properties).get("acceptance")
    if marker:
        number, title = marker
        prev = _acceptance.get(number, (title, True))
        _acceptance[number] = (title, prev[1] and report.passed)


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_setup(item):
    m = item.get_closest_marker("acceptance")
    if m:
        item.user_properties.append(("acceptance", (m.args[0], m.args[1])))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, ok = _acceptance[number]
        terminalreporter.write_line(f"AC-{number:02d} {'PASS' if ok else 'FAIL'}  {title}")


@pytest.fixture
def golden():
    def read(name):
        return (GOLDEN / name).read_text(encoding="utf-8").rstrip("\n")
    return read
