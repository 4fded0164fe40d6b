import numpy as np
import pytest

from nilheat.groups import GroupParams


@pytest.fixture(scope="session")
def h1():
    return GroupParams(1, (1,), (1.0,))


@pytest.fixture(scope="session")
def h1k2():
    return GroupParams(1, (2,), (1.0,))


@pytest.fixture(scope="session")
def noniso():
    return GroupParams(2, (1, 2), (0.5, 1.0))


@pytest.fixture(scope="session", params=["h1", "h1k2", "noniso"])
def any_group(request):
    return {
        "h1": GroupParams(1, (1,), (1.0,)),
        "h1k2": GroupParams(1, (2,), (1.0,)),
        "noniso": GroupParams(2, (1, 2), (0.5, 1.0)),
    }[request.param]


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.Philox(key=np.uint64(987654321)))
