import sys

import pytest

from ancient_fbmcf.flow_solver import run
from ancient_fbmcf.spectrum import solve_lambda0

_RUNS = {}


@pytest.fixture(scope="session")
def ground_states():
    return {n: solve_lambda0(n) for n in range(1, 6)}


def flow_run(n, rho, M=400, snapshot_every=10, **kw):
    """Session cache of flow runs keyed by their parameters."""
    key = (n, rho, M, snapshot_every, tuple(sorted(kw.items())))
    if key not in _RUNS:
        _RUNS[key] = run(n, rho, M=M, snapshot_every=snapshot_every, **kw)
    return _RUNS[key]


@pytest.fixture(scope="session")
def run_n2():
    return flow_run(2, 0.05)


@pytest.fixture(scope="session")
def run_n1():
    return flow_run(1, 0.05)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
