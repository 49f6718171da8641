import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import A  # noqa: E402

from sealsim.mesh import AnnulusMesh  # noqa: E402
from sealsim.model import BearingConfig  # noqa: E402


@pytest.fixture
def coarse():
    return AnnulusMesh(A, 8, 40)


@pytest.fixture
def cfg():
    return BearingConfig()


def pytest_terminal_summary(terminalreporter):
    from _report import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES):
            terminalreporter.write_line(line)
