import numpy as np
import pytest

from flightopt.dynamics import AircraftParams, State
from flightopt.transcription import CftocProblem
from flightopt.wind import PolynomialWindField

# airport reference points (FAA / OurAirports)
ORD = (-87.9048, 41.9786)
SFO = (-122.3750, 37.6189)


@pytest.fixture
def params():
    return AircraftParams()


@pytest.fixture
def published_wind():
    return PolynomialWindField.published()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_states(rng, n):
    return np.column_stack([
        rng.uniform(-3500, 500, n),
        rng.uniform(-1500, 500, n),
        rng.uniform(150, 300, n),
        rng.uniform(56000, 70000, n),
        rng.uniform(-np.pi, np.pi, n),
    ])


def random_controls(rng, n):
    return np.column_stack([rng.uniform(0, 1.2e5, n), rng.uniform(-5e-3, 5e-3, n)])


def small_problem(n_steps=8, hours=0.5, dist=300.0, heading=0.3, **kw):
    """Short no-wind hop used by solver, sim and CLI tests."""
    xf = (dist * np.cos(heading), dist * np.sin(heading))
    args = dict(
        n_steps=n_steps,
        dt=hours * 3600 / n_steps,
        x0=State(0, 0, 230, 70000, heading),
        xf=State(xf[0], xf[1], 230, 70000, heading),
        x_lb=[-1000, -1000, 120, 55000, -10],
        x_ub=[1000, 1000, 310, 70000, 10],
        u_lb=[0, -0.005],
        u_ub=[1.2e5, 0.005],
    )
    args.update(kw)
    return CftocProblem(**args)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def acceptance(criterion, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
