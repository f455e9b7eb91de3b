import numpy as np
import pytest

import hysim


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    """Compile the jitted kernels once so timed tests measure steady state."""
    hysim.propagate_rk4([2.5, 2.5, 5.0], hysim.Mode(0, 0), 1.0, dt=0.5)
    hysim.run_stochastic([2.5, 2.5, 5.0], hysim.Mode(0, 0), horizon=2.0,
                         eps=0.1, source=0, dt=0.5)
    hysim.run_stochastic([2.5, 2.5, 5.0], hysim.Mode(0, 0), horizon=2.0,
                         eps=0.1, source=0, dt=0.5, scheme="summed")


@pytest.fixture(scope="session")
def diagonal_run():
    """Deterministic run from the canonical diagonal start, shared by tests."""
    return hysim.run_deterministic([2.5, 2.5, 5.0], hysim.Mode(0, 0),
                                   horizon=5e3, dt=0.5)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One visible PASS/FAIL line per acceptance criterion at the end of a run."""
    entries = []
    for status, passed in (("passed", True), ("failed", False), ("error", False)):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if ("test_acceptance.py::test_criterion" in nodeid
                    and getattr(rep, "when", "call") == "call"):
                entries.append((nodeid.split("::")[-1], passed))
    if entries:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, ok in sorted(entries):
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")
