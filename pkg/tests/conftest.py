import numpy as np
import pytest

from core.bifurcation import GridAxis, ParamGrid
from core.maps import instantiate
from core.polyalg import HomPair


@pytest.fixture
def square_map():
    return instantiate("quadratic", [0.0])


@pytest.fixture
def chebyshev_map():
    return instantiate("quadratic", [-2.0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture
def random_lift(rng):
    def build(d=2):
        a = rng.standard_normal(d + 1) + 1j * rng.standard_normal(d + 1)
        b = rng.standard_normal(d + 1) + 1j * rng.standard_normal(d + 1)
        return HomPair(a, b)
    return build


@pytest.fixture
def small_grid():
    return ParamGrid((GridAxis(-0.5 + 0j, 2.0, 32),))


@pytest.fixture
def out_prefix(tmp_path):
    return str(tmp_path / "out" / "run")
