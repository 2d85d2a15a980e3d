import pytest

from strataware import ToyParams, generate_toy, identity_cost_model


@pytest.fixture(scope="session")
def toy_default():
    """The pinned-default synthetic dataset, shared read-only across tests."""
    return generate_toy()


@pytest.fixture(scope="session")
def toy_small():
    return generate_toy(ToyParams(n=400, seed=1))


@pytest.fixture(scope="session")
def toy_cost(toy_default):
    # unit improvable costs, cheap manipulable costs (inverse block 0.2 I)
    return identity_cost_model(toy_default.taxonomy, 1.0, 0.2)
