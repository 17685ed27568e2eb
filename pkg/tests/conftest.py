import numpy as np
import pytest

from homfields.gaussian_br import BrownResnick, SpectralModel, VariogramSpec
from homfields.lattice import Lattice, enumerate_window


@pytest.fixture
def Z1():
    return Lattice([[1.0]])


@pytest.fixture
def br_model():
    return SpectralModel(VariogramSpec(1.0, 1.0), d=1, alpha=1.0)


@pytest.fixture
def br_factory(br_model):
    return lambda w: BrownResnick(br_model, w)


@pytest.fixture
def br4(Z1, br_factory):
    return br_factory(enumerate_window(Z1, 4))


def assert_within(est, target, k=4.0):
    """Mean within ``k`` standard errors of ``target`` (exact match when se is 0)."""
    if est.se == 0:
        assert est.mean == pytest.approx(target, abs=1e-12)
    else:
        assert abs(est.mean - target) <= k * est.se, (est, target)


# acceptance verdicts, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
