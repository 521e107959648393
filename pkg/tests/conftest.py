import pytest

from cogalloc import default_system_params


@pytest.fixture
def params():
    return default_system_params()


@pytest.fixture
def geom(params):
    return params.geometry()
