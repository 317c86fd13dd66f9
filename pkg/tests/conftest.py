import numpy as np
import pytest

from twoscale.experiments import demo_class_params, demo_target


@pytest.fixture(scope="session")
def staircase():
    """The six-piece demo staircase used throughout the experiments."""
    return demo_target()


@pytest.fixture(scope="session")
def staircase_params():
    return demo_class_params()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
