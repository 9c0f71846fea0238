import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def bidisc_k():
    from kernelquant.examples.bidisc import bidisc_kernel

    return bidisc_kernel()


@pytest.fixture(scope="session")
def gaussian():
    from kernelquant.examples.moment import MomentMeasure

    return MomentMeasure()


@pytest.fixture(scope="session")
def two_atom():
    from kernelquant.examples.moment import MomentMeasure

    return MomentMeasure.discrete([-1.0, 1.0])
