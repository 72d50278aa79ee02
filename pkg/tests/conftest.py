import numpy as np
import pytest

from bec_linear import evolution, kernels, observables, operators
from bec_linear.kernels import Convention
from bec_linear.scenario import InitialData, initial_state


@pytest.fixture(scope="session")
def small_generator():
    grid = operators.make_grid(64, 6.0, 2.0)
    w = kernels.equilibrium_weights(grid.nodes, Convention.SINH_X2)
    return operators.assemble_generator(grid, w)


@pytest.fixture(scope="session")
def half_generator():
    grid = operators.make_grid(400, 8.0, 2.0)
    w = kernels.equilibrium_weights(grid.nodes, Convention.SINH_HALF_X2)
    return operators.assemble_generator(grid, w)


@pytest.fixture(scope="session")
def example1_run(half_generator):
    """EXAMPLE1 to tau = 50 with every step stored."""
    A = half_generator
    f0 = initial_state(InitialData("EXAMPLE1"), A.grid.nodes, A.weights.convention)
    run = evolution.run(f0, A, evolution.Schedule(tau_end=50.0, dt=0.01))
    series = observables.drift_series(run, A)
    return run, series


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_VERDICTS = []


@pytest.fixture
def verdict():
    """Record one acceptance verdict line; printed again in the terminal summary."""
    def record(number, title, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} [{number:>2}] {title}: {detail}"
        print(line)
        _VERDICTS.append((number, line))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_VERDICTS):
        terminalreporter.write_line(line)
