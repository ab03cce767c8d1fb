import numpy as np
import pytest

from albatross.nfg import NormalFormGame


def bimatrix(a, b):
    return NormalFormGame(np.array([a, b], dtype=float))


@pytest.fixture
def zero_sum_2x2():
    """Zero-sum 2x2 game; rows a, b for player 1, columns c, d for player 2."""
    a = [[-4.0, -7.0], [-6.0, 2.0]]
    return bimatrix(a, -np.array(a))


@pytest.fixture
def coordination_game():
    m = [[1.0, -1.0], [-1.0, 1.0]]
    return bimatrix(m, m)


@pytest.fixture
def stag_hunt():
    return bimatrix([[4.0, 0.0], [1.0, 2.0]], [[4.0, 1.0], [0.0, 2.0]])


_VERDICTS = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for the acceptance summary."""

    def record(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _VERDICTS.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS):
            terminalreporter.write_line(line)
