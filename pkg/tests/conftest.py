from __future__ import annotations

import pytest

from support import make_demo
from tdasim import build


@pytest.fixture(scope="session")
def demo():
    """Benign seven-node walkthrough scenario."""
    return make_demo()


@pytest.fixture(scope="session")
def demo_graph(demo):
    return build(demo.windows, demo.t_tr)


@pytest.fixture(scope="session")
def two_attacker():
    """Same network with nodes A and C delaying by 5 s and 6 s."""
    return make_demo({1: 5, 3: 6})


@pytest.fixture(scope="session")
def single_attacker():
    """Same network with only node A delaying by 5 s."""
    return make_demo({1: 5})


def pytest_terminal_summary(terminalreporter):
    # verdict lines are captured per-test; repeat them where they stay visible
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
