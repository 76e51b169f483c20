import pytest

from problems import make_additive_linear, make_double_well, make_gbm, make_oscillator


@pytest.fixture
def double_well():
    return make_double_well(0.3)


@pytest.fixture
def oscillator():
    return make_oscillator()


@pytest.fixture
def gbm():
    return make_gbm(mu=0.5, sigma=0.8)


@pytest.fixture
def additive():
    return make_additive_linear(lam=1.0, sigma=0.5)
