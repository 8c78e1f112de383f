import pytest

from ._data import load_four_robots, load_trace_fit, mm12_model


@pytest.fixture(scope="package")
def mm12():
    return mm12_model()


@pytest.fixture(scope="package")
def four_robots():
    return load_four_robots()


@pytest.fixture(scope="package")
def trace_fit():
    return load_trace_fit()
