"""Shared fixtures and the acceptance summary printed after the run."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).resolve().parent
CASES_DIR = TESTS_DIR.parent / "cases"

if str(TESTS_DIR) not in sys.path:
    sys.path.insert(0, str(TESTS_DIR))

#: criterion label -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def cases_dir() -> Path:
    return CASES_DIR


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE, key=lambda k: (int(k.split()[0].rstrip("abc")), k)):
        ok, detail = ACCEPTANCE[label]
        terminalreporter.write_line(f"CRITERION {label}: {'PASS' if ok else 'FAIL'} - {detail}")
