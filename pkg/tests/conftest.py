import pytest

from conflictlab.model import make_grid


@pytest.fixture(scope="session")
def g256():
    return make_grid(256)


@pytest.fixture(scope="session")
def g1024():
    return make_grid(1024)


@pytest.fixture(scope="session")
def g4096():
    return make_grid(4096)
