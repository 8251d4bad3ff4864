"""Shared fixtures and the acceptance-criterion reporting hook."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("thorough", parent=settings.get_profile("default"), max_examples=300)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)


# Acceptance tests register one line each here; the terminal summary hook
# prints them after the run so every criterion has a visible verdict even
# when stdout capture swallows in-test prints.
ACCEPTANCE_LINES = []


def record_criterion(number: int, passed: bool, detail: str) -> None:
    verdict = "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES.append(f"CRITERION {number:2d}: {verdict} - {detail}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
