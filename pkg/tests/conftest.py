"""Shared test configuration: acceptance criterion reporting."""

from __future__ import annotations

import re
import time

_SUITE_STARTED = time.monotonic()
_CRITERION_RE = re.compile(r"test_criterion_(\d+)")
_results: dict[int, tuple[str, str]] = {}


def suite_elapsed_seconds() -> float:
    return time.monotonic() - _SUITE_STARTED


def pytest_runtest_logreport(report):
    match = _CRITERION_RE.search(report.nodeid)
    if not match or report.when != "call":
        return
    number = int(match.group(1))
    label = report.nodeid.split("::")[-1]
    outcome = "PASS" if report.passed else "FAIL"
    # keep the worst outcome if a criterion maps to several tests
    if _results.get(number, ("", "PASS"))[1] != "FAIL":
        _results[number] = (label, outcome)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        label, outcome = _results[number]
        terminalreporter.write_line(f"criterion {number:>2}: {outcome}  ({label})")
    terminalreporter.write_line(f"suite runtime: {suite_elapsed_seconds():.1f}s (budget: 60s)")
