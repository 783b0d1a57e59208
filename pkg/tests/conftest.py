import sys

import numpy as np
import pytest

from pebbletep.compile import compile_black_to_dtbp, compile_fractional_to_bintbp, compile_wbw_to_ntbp
from pebbletep.pebbling import generate_black_strategy, generate_fractional_strategy, generate_ro_wbw_strategy


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def ro32():
    return compile_wbw_to_ntbp(generate_ro_wbw_strategy(3), 2)


@pytest.fixture(scope="session")
def ro22():
    return compile_wbw_to_ntbp(generate_ro_wbw_strategy(2), 2)


@pytest.fixture(scope="session")
def dt32():
    return compile_black_to_dtbp(generate_black_strategy(3), 2)


@pytest.fixture(scope="session")
def bi24():
    return compile_fractional_to_bintbp(generate_fractional_strategy(2, 2), 4)


@pytest.fixture(scope="session")
def bi44():
    return compile_fractional_to_bintbp(generate_fractional_strategy(4, 2), 4)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
