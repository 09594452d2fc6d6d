import math

import pytest

from steklov_lab.fem import UNIT_WEIGHT, steklov_solve
from steklov_lab.geometry import Disk, Ellipse
from steklov_lab.mesh import build_mesh


@pytest.fixture(scope="session")
def disk_solution():
    mesh = build_mesh(Disk(1.0), n_radial=32, n_angular=128)
    return steklov_solve(mesh, UNIT_WEIGHT, 8)


@pytest.fixture(scope="session")
def ellipse_solution():
    mesh = build_mesh(Ellipse(2.0, 1.0), n_radial=32, n_angular=128)
    return steklov_solve(mesh, UNIT_WEIGHT, 8)


def rel(a, b):
    return abs(a - b) / abs(b) if b else abs(a)


SQRT_PI = math.sqrt(math.pi)
