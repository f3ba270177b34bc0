import sys
from fractions import Fraction as F
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from roipace.market import CostCurve, MarketInstance  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def ex1():
    hb = CostCurve.hard_budget(F(1, 2))
    return MarketInstance(((2, 1), (1, 2)), (hb, hb))


@pytest.fixture
def soft_curve():
    return CostCurve.from_pairs([(0, 1), (F(1, 2), 10)])


@pytest.fixture
def a3(soft_curve):
    return MarketInstance(((2, 1), (1, 2)), (soft_curve, soft_curve))


@pytest.fixture
def a4():
    b = CostCurve.hard_budget(1)
    return MarketInstance(((1, 0), (F(11, 10), 1)), (b, b))


@pytest.fixture
def a4r(a4):
    return a4.with_reserves((1, 1))


@pytest.fixture
def a1():
    return MarketInstance(((2,), (150,)), (CostCurve.quasi_linear(), CostCurve.quasi_linear(100)))


@pytest.fixture
def a2():
    return MarketInstance(((1,), (F(1, 2),)), (CostCurve.hard_budget(F(1, 100)), CostCurve.quasi_linear()))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
