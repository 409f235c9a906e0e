"""Shared fixtures plus the acceptance report hook.

Acceptance tests register a verdict per criterion before asserting, so
the end-of-run summary always prints one PASS/FAIL line per criterion
even when a criterion legitimately fails.
"""

import numpy as np
import pytest

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    _ACCEPTANCE[number] = (bool(passed), detail)


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[acceptance] criterion {number}: {verdict}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(7)
