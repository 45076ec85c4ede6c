import numpy as np
import pytest

from hopfcole import (HamiltonianParams, Interval, RadialBall, SolverConfig, linear_coupling,
                      solve_coupled, solve_rlaplace)
from hopfcole.expr import Potential


@pytest.fixture(scope="session")
def quadratic_instance():
    """nu = h0 = 1, r = 2, f = m + sin(2 pi x) on (0, 1)."""
    return (Interval(0.0, 1.0), HamiltonianParams(nu=1.0, r=2.0, h0=1.0),
            linear_coupling(1.0, Potential("sin(2*pi*x)")))


@pytest.fixture(scope="session")
def quadratic_solutions(quadratic_instance):
    dom, params, f = quadratic_instance
    cfg = SolverConfig(n=257)
    sol, otrace = solve_coupled(dom, params, f, cfg)
    phi, rtrace = solve_rlaplace(dom, params, f, cfg)
    return {"sol": sol, "oracle_trace": otrace, "phi": phi, "rlaplace_trace": rtrace,
            "h": dom.spacing(cfg.n)}


@pytest.fixture(scope="session")
def radial_r3_instance():
    """r = 3 on the unit disc with f = m + rho^2 (a non-constant solution)."""
    return (RadialBall(1.0, 2), HamiltonianParams(nu=1.0, r=3.0, h0=1.0),
            linear_coupling(1.0, Potential("x**2")))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import report_lines
    except ImportError:
        return
    lines = report_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
