"""Shared test plumbing: the acceptance-criteria result ledger.

Acceptance tests record one (criterion, verdict) entry each; the terminal
summary prints them as single PASS/FAIL lines after the run so the gate's
outcome is readable at a glance even with output capture on.
"""

from __future__ import annotations

_ACCEPTANCE_RESULTS: list[tuple[int, str, bool, str]] = []


def record_acceptance(num: int, description: str, passed: bool, detail: str = "") -> None:
    _ACCEPTANCE_RESULTS.append((num, description, passed, detail))


def pytest_terminal_summary(terminalreporter) -> None:
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, description, passed, detail in sorted(_ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        line = f"ACCEPTANCE {num}: {status} - {description}"
        if detail:
            line += f" [{detail}]"
        terminalreporter.write_line(line)
