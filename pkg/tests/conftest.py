import math

import numpy as np
import pytest

from nematicflow import DirectorField, MacVectorField, ScalarField, State, make_grid

SEEDS = range(10)


def random_scalar(grid, rng):
    return ScalarField.from_interior(grid, rng.standard_normal(grid.dims))


def random_velocity(grid, rng):
    return MacVectorField.from_interior(
        grid, [rng.standard_normal(tuple(n - 2 for n in grid.face_shape(a))) for a in range(grid.ndim)])


def random_director(grid, rng, unit=True):
    v = rng.standard_normal((3,) + tuple(grid.dims))
    if unit:
        v /= np.linalg.norm(v, axis=0)
    return DirectorField.from_interior(grid, v)


def random_state(grid, rng):
    return State(random_velocity(grid, rng), random_director(grid, rng), random_scalar(grid, rng))


@pytest.fixture(params=["periodic", "wall"])
def bc_mode(request):
    return request.param


@pytest.fixture
def grid8(bc_mode):
    return make_grid((8, 8), (1.0, 1.3), bc_mode)


@pytest.fixture
def box2pi():
    return make_grid((32, 32), (2 * math.pi, 2 * math.pi))


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = {}


def record_acceptance(number, title, passed, detail):
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
