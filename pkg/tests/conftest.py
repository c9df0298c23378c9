from __future__ import annotations

import numpy as np
import pytest

from linboltz.model import BackgroundState, SClosure, derive_params

_VERDICTS: dict[str, tuple[bool, str]] = {}


def record(number: int, name: str, passed: bool, detail: str) -> None:
    """Remember one acceptance verdict; printed in the terminal summary."""
    key = f"{number:02d} {name}"
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {name}: {detail}"
    _VERDICTS[key] = (bool(passed), line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_VERDICTS):
        terminalreporter.write_line(_VERDICTS[key][1])


@pytest.fixture
def bg():
    return BackgroundState()


@pytest.fixture
def params():
    return derive_params(3.0, 1.0, 0.5, 1.0)


@pytest.fixture
def s1():
    return SClosure.constant(1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
