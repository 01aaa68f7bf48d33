import pytest

from vidtext.backends import MockBackend, ToyBackend


@pytest.fixture(scope="session")
def toy():
    return ToyBackend(seed=0)


@pytest.fixture()
def mock():
    return MockBackend(seed=0)
