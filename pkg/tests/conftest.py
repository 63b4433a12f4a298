from __future__ import annotations

import pytest
from hypothesis import settings

from brwlab.model import ModelParams

# first calls pay for JIT compilation
settings.register_profile("brwlab", deadline=None)
settings.load_profile("brwlab")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def crit():
    return ModelParams(1.0, 4.0, 0.5)


@pytest.fixture
def sub():
    return ModelParams(1.0, 4.0, 0.4)


@pytest.fixture
def sup():
    return ModelParams(1.0, 4.0, 4.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("]")[1].split()[0])):
        terminalreporter.write_line(line)
