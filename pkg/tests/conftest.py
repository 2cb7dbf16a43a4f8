import sys

import numpy as np
import pytest

from elastoscatter import make_medium
from elastoscatter.acquisition import direction_set
from elastoscatter.foldy_lax import Scene


def random_spd(rng, scale=0.05):
    A = rng.standard_normal((3, 3))
    return scale * (A @ A.T + 3 * np.eye(3))


@pytest.fixture
def medium():
    return make_medium(2.0, 1.0, 2 * np.pi)


@pytest.fixture
def point_scene(medium):
    """Three point-like scatterers with random SPD capacitances."""
    rng = np.random.default_rng(1)
    centers = [[0.0, 0.0, 0.0], [0.7, 0.1, 0.2], [-0.3, 0.6, -0.4]]
    return Scene.point_scatterers(medium, centers, [random_spd(rng) for _ in range(3)])


@pytest.fixture
def dirs30():
    return direction_set(30)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.LINES:
        terminalreporter.write_line(line)
