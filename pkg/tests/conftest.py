import numpy as np
import pytest
from hypothesis import strategies as st

from oneshot_dpd.estimators import LinearConstraint
from oneshot_dpd.model import ModelParams, StressPlan, simulation_plan

TRUE = ModelParams(0.003, 0.03)


@pytest.fixture(scope="session")
def plan():
    return simulation_plan()


@pytest.fixture(scope="session")
def truth():
    return TRUE


@pytest.fixture(scope="session")
def null_constraint():
    return LinearConstraint((0.0, 1.0), 0.03)


def random_plan(rng, k_max=4, extra_max=6, x_range=(0.0, 60.0), t_max=100.0):
    """Random valid plan: k levels, change times inside the inspection grid."""
    k = int(rng.integers(1, k_max + 1))
    x = np.sort(rng.uniform(*x_range, size=k))
    while np.any(np.diff(x) <= 0):
        x = np.sort(rng.uniform(*x_range, size=k))
    grid = np.sort(rng.choice(np.arange(1, int(t_max) + 1), size=k + int(rng.integers(0, extra_max + 1)),
                              replace=False)).astype(float)
    tau = np.sort(rng.choice(grid[:-1], size=k - 1, replace=False)) if k > 1 else np.array([])
    tau = np.append(tau, grid[-1])
    return StressPlan(x, tau, grid)


@st.composite
def plans(draw, k_max=4):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_plan(np.random.default_rng(seed), k_max=k_max)


@st.composite
def params(draw, theta0=(1e-6, 1.0), theta1=(-0.2, 0.2)):
    lo, hi = np.log(theta0[0]), np.log(theta0[1])
    t0 = float(np.exp(draw(st.floats(lo, hi))))
    t1 = draw(st.floats(*theta1))
    return ModelParams(t0, t1)


def probability_vectors(n_min=2, n_max=8, floor=0.0):
    return st.lists(st.floats(floor, 1.0), min_size=n_min, max_size=n_max).filter(
        lambda v: sum(v) > 1e-3).map(lambda v: np.array(v) / sum(v))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
