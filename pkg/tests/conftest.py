import numpy as np
import pytest

from hubplan.fixtures import desk_a
from hubplan.hub_model import build_topology


@pytest.fixture(scope="session")
def desk():
    """``(spec, topo, scen)`` for the two-converter heat hub."""
    spec, scen = desk_a()
    return spec, build_topology(spec), scen


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
