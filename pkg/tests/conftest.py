import pytest

from meshsim.config import SimConfig


@pytest.fixture(scope="session")
def config() -> SimConfig:
    return SimConfig()
