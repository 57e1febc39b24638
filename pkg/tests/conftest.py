"""Shared fields and graphs; graphs are session-scoped since building them dominates test time"""

import pytest

from fqflats.gf import field_new
from fqflats.incidence import build_graph


@pytest.fixture(scope="session")
def gf3():
    return field_new(3)


@pytest.fixture(scope="session")
def gf5():
    return field_new(5)


@pytest.fixture(scope="session")
def gf9():
    return field_new(9)


@pytest.fixture(scope="session")
def plane_graph(gf3):
    """Points against lines of F_3^2"""
    return build_graph(gf3, 2, 0, 1)


@pytest.fixture(scope="session")
def space_graph(gf3):
    """Points against planes of F_3^3"""
    return build_graph(gf3, 3, 0, 2)


@pytest.fixture(scope="session")
def lines_graph(gf3):
    """Lines against 3-flats of F_3^4"""
    return build_graph(gf3, 4, 1, 3)
