"""Acceptance suite: one pass/fail line per criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines, or use
``elastoscatter validate``.
"""
import pytest

from elastoscatter.validation import CHECKS, run_checks

# lines collected for the terminal summary (see conftest.py)
LINES = []


@pytest.mark.slow
@pytest.mark.parametrize("name", list(CHECKS))
def test_criterion(name):
    rows = run_checks([name])
    for row in rows:
        print(row.line())
        LINES.append(row.line())
    failed = [row.line() for row in rows if not row.passed]
    assert not failed, "\n".join(failed)
