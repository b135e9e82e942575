"""Shared fixtures plus the acceptance-criteria reporter.

Acceptance tests record one line per criterion through the `criterion`
fixture; the lines are printed in a dedicated section of the terminal
summary so a plain `pytest` run shows the pass/fail state of every
criterion at a glance.
"""
import re

import numpy as np
import pytest

_CRITERIA = {}


def _record(number, description, passed, detail=""):
    mark = "PASS" if passed else "FAIL"
    line = f"criterion {number:2d} [{mark}] {description}"
    if detail:
        line += f" ({detail})"
    _CRITERIA[number] = line


@pytest.fixture
def criterion():
    """Record and assert one acceptance criterion."""

    def check(number, description, passed, detail=""):
        _record(number, description, bool(passed), detail)
        assert passed, f"criterion {number}: {description} ({detail})"

    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    for key in ("failed", "error"):
        for report in terminalreporter.stats.get(key, []):
            match = re.search(r"test_criterion_(\d+)", getattr(report, "nodeid", ""))
            if match:
                number = int(match.group(1))
                _CRITERIA.setdefault(
                    number,
                    f"criterion {number:2d} [FAIL] test errored before recording",
                )
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)
