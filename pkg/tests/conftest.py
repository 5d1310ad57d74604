import numpy as np
import pytest

from permround.gaussian import RandomStream, haar_orthogonal

_ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion."""

    def _report(label: str, ok: bool, detail: str = "") -> bool:
        _ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def stream():
    return RandomStream(2718)


@pytest.fixture
def haar():
    def _haar(n, seed=0):
        return haar_orthogonal(n, RandomStream(seed, stream_id=n))

    return _haar
