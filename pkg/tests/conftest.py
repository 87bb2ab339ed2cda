import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def record_criterion(number, title, passed, detail=""):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}"
    if detail:
        line += f" | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
