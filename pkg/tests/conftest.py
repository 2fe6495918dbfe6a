import numpy as np
import pytest

from bershift.processes import CUSTOM_EVALUATORS, InnovationSpec, ShiftFunctional, ShiftProcess


@pytest.fixture
def rademacher():
    return InnovationSpec.rademacher()


@pytest.fixture
def ma1_gaussian():
    return ShiftProcess(InnovationSpec.gaussian(0.0, 1.0), ShiftFunctional.linear({0: 1.0, 1: 0.5}))


@pytest.fixture
def ma2_rademacher():
    return ShiftProcess(InnovationSpec.rademacher(), ShiftFunctional.linear({0: 1.0, 1: 0.5, 2: -0.3}))


@pytest.fixture
def custom_tanh():
    return ShiftProcess(InnovationSpec.uniform(-1.0, 1.0),
                        ShiftFunctional.custom(2, CUSTOM_EVALUATORS["tanh_sum"], name="tanh_sum"))


def brute_pairs(kernel, x):
    total = 0.0
    n = len(x)
    for j in range(n):
        for i in range(j):
            total += float(kernel(x[i], x[j]))
    return total


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS):
        terminalreporter.write_line(line)
