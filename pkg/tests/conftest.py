import os

import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

CRITERION_LINES: list[str] = []


@pytest.fixture(scope="session")
def report_criterion():
    """Record one PASS/FAIL summary line; all lines are repeated at the end of the run."""

    def record(line: str) -> None:
        CRITERION_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
