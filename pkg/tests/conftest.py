"""Prints one PASS/FAIL line per acceptance criterion at the end of the run."""

import pytest

_outcomes: dict = {}
_titles: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion this test belongs to")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            num, title = mark.args
            _titles[num] = title
            item.user_properties.append(("criterion", num))


def pytest_runtest_logreport(report):
    num = dict(report.user_properties).get("criterion")
    if num is None:
        return
    if report.when == "call" or report.failed:
        ok = report.passed and _outcomes.get(num, True)
        _outcomes[num] = ok


def pytest_terminal_summary(terminalreporter):
    if not _titles:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_titles):
        status = {True: "PASS", False: "FAIL", None: "NOT RUN"}[_outcomes.get(num)]
        terminalreporter.write_line(f"criterion {num:2d}  {status:7s} {_titles[num]}")
