import math

import numpy as np
import pytest

from gentaylor import LinearOperator, SmoothFunction, parse

# Filled by tests/test_acceptance.py, printed once at the end of the session.
ACCEPTANCE = {}


def fn(text):
    return SmoothFunction.from_expr(parse(text), text)


@pytest.fixture(scope="session")
def harmonic():
    return LinearOperator.constant([0, 1], (-10, 10), "harmonic")


@pytest.fixture(scope="session")
def quartic():
    return LinearOperator.constant([0, 5, 0, 4], (-10, 10), "quartic")


def pure(n, domain=(-10, 10)):
    return LinearOperator.constant([0] * n, domain)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {text}")


TWO_PI = 2 * math.pi
GRID = np.linspace(0, TWO_PI, 50)
