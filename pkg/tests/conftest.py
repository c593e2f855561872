"""Collects acceptance outcomes and prints one line per criterion at the end."""
import pytest

_OUTCOMES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): one numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    prev = _OUTCOMES.get(number, (title, True, ""))
    failed = report.failed or (report.when == "call" and report.skipped)
    if failed:
        reason = report.longreprtext.strip().splitlines()[-1] if report.longreprtext else report.when
        _OUTCOMES[number] = (title, False, reason)
    elif number not in _OUTCOMES:
        _OUTCOMES[number] = prev


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        title, ok, reason = _OUTCOMES[number]
        line = f"[{'PASS' if ok else 'FAIL'}] {number}. {title}"
        if not ok:
            line += f" ({reason})"
        terminalreporter.write_line(line)
