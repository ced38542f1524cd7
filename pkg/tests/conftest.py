import os
import sys
import time

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "parts": []})
    detail = dict(item.user_properties).get("detail", "")
    if report.failed:
        msg = str(report.longrepr.reprcrash.message).splitlines()[0] if hasattr(
            report.longrepr, "reprcrash") else "failed"
        detail = f"{detail} {msg}".strip()
    label = item.callspec.id if hasattr(item, "callspec") else ""
    entry["parts"].append((label, report.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        ok = all(p for _, p, _ in entry["parts"])
        parts = "; ".join(
            f"{label + ': ' if label else ''}{'pass' if p else 'FAIL'}{' (' + d + ')' if d else ''}"
            for label, p, d in entry["parts"]
        )
        tr.write_line(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {entry['title']}: {parts}")


@pytest.fixture
def detail(record_property):
    """Attach a short measured-value summary to the acceptance line."""
    start = time.perf_counter()
    notes = []

    def add(text):
        notes.append(text)
        record_property("detail", ", ".join(notes + [f"{time.perf_counter() - start:.1f}s"]))

    add.elapsed = lambda: time.perf_counter() - start
    return add
