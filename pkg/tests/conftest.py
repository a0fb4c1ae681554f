import pytest

from svmcmc.mixture import MixtureTable
from svmcmc.model import Params, PriorSpec, simulate_sv
from svmcmc.rng import RandomStream


@pytest.fixture(scope="session")
def table() -> MixtureTable:
    return MixtureTable.omori()


@pytest.fixture(scope="session")
def prior() -> PriorSpec:
    return PriorSpec()


@pytest.fixture(scope="session")
def small_dataset():
    """Twenty observations from the model at moderate persistence."""
    dataset, x_true = simulate_sv(
        Params(c=0.3, phi=0.9, sigma2=0.2), 20, RandomStream(314, (0,))
    )
    return dataset, x_true
