import pytest

from coupled_nls.continuation import build_branch
from coupled_nls.groundstate import ground_state_on
from coupled_nls.radial import make_grid
from coupled_nls.spectral import curves, tau0

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def base_grid():
    return make_grid(20.0, 2000)


@pytest.fixture(scope="session")
def gs(base_grid):
    return ground_state_on(base_grid)


@pytest.fixture(scope="session")
def tau0_result():
    return tau0()


@pytest.fixture(scope="session")
def curve11(tau0_result):
    return curves(1.0, 1.0, tau0_result=tau0_result)


@pytest.fixture(scope="session")
def curve21(tau0_result):
    return curves(2.0, 1.0, tau0_result=tau0_result)


@pytest.fixture(scope="session")
def branch_b2(curve11):
    """beta = 2, mu = (1, 1), seeded from family 1 over lam in [0.05, 20]."""
    return build_branch(2.0, curve11, 1, window=(0.05, 20.0))


def pytest_runtest_logreport(report):
    label = getattr(report, "criterion", None)
    if label is None:
        for key, value in report.user_properties:
            if key == "criterion":
                label = value
    if label is None:
        return
    if report.when == "call" or report.outcome != "passed":
        prev = ACCEPTANCE.get(label)
        if prev != "FAIL":
            ACCEPTANCE[label] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(f"{ACCEPTANCE[label]}  {label}")
