import pytest

import helpers
from ngs import oracle
from ngs.grids import RadialGrid


@pytest.fixture(scope="session")
def grid20() -> RadialGrid:
    # the workhorse resolution for quantitative checks
    return RadialGrid(1, 20.0, 2000)


@pytest.fixture(scope="session")
def grid12() -> RadialGrid:
    return RadialGrid(1, 12.0, 2048)


@pytest.fixture(scope="session")
def sech_sol(grid20):
    return oracle.shoot_Up(3.0, 1, grid20)


@pytest.fixture(scope="session")
def sech2_sol(grid20):
    return oracle.shoot_Up(2.0, 1, grid20)


@pytest.fixture(scope="session")
def n3_sol():
    # second-order identity residuals need a fine grid in 3d; the shooting
    # itself is grid-independent, only the quadrature lives on these nodes
    return oracle.shoot_Up(3.0, 3, RadialGrid(3, 20.0, 20000))


def pytest_terminal_summary(terminalreporter):
    if helpers.ACCEPTANCE_LINES:
        terminalreporter.ensure_newline()
        terminalreporter.section("acceptance summary", sep="-")
        for line in helpers.ACCEPTANCE_LINES:
            terminalreporter.line(line)
