import math

import pytest

from conesys import (
    make_flat_torus,
    make_square_klein_bottle,
    make_staircase_surface,
    make_two_cone_decagon,
)


@pytest.fixture(scope="session")
def torus_square():
    return make_flat_torus((1, 0), (0, 1))


@pytest.fixture(scope="session")
def torus_hex():
    from fractions import Fraction

    return make_flat_torus((1, 0), (Fraction(1, 2), math.sqrt(3) / 2))


@pytest.fixture(scope="session")
def klein():
    return make_square_klein_bottle(1, 1)


@pytest.fixture(scope="session")
def staircase2():
    return make_staircase_surface(2)


@pytest.fixture(scope="session")
def staircase3():
    return make_staircase_surface(3)


@pytest.fixture(scope="session")
def decagon():
    return make_two_cone_decagon()


def cone_offset_point(surface, dist, angle):
    """Point at the given distance and fan angle from the first cone point."""
    from conesys.cli import point_at_cone_offset

    return point_at_cone_offset(surface, dist, angle)
