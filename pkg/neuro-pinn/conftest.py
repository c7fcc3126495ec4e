"""pytest options shared by every test module."""

import logging

import pytest

from models import ModelSpec, ParamMeta, register_model


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False,
        help="run long acceptance checks (full simulations, training runs)",
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long acceptance check, needs --runslow")
    logging.getLogger("neuro-pinn").setLevel(logging.DEBUG)


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


# Small systems with known answers, registered once for the whole session.

class LinearTestModel(ModelSpec):
    """dX/dt = A X with A = [[a11, a12], [a21, a22]]."""

    id = "linear-test"
    state_names = ("V", "y")
    param_meta = (
        ParamMeta("a11", -1.0), ParamMeta("a12", 2.0),
        ParamMeta("a21", -0.5), ParamMeta("a22", -3.0),
    )
    output_maps = {"V": "identity", "y": "identity"}
    state_scales = (1.0, 1.0)
    state_bounds = ((-5.0, 5.0), (-5.0, 5.0))

    def _rhs(self, state, p):
        v, y = state
        return [p["a11"] * v + p["a12"] * y, p["a21"] * v + p["a22"] * y]


class FoldTestModel(ModelSpec):
    """dV/dt = mu - V^2: two equilibria for mu > 0, none for mu < 0."""

    id = "fold-test"
    state_names = ("V",)
    param_meta = (ParamMeta("mu", 0.5),)
    output_maps = {"V": "identity"}
    state_scales = (1.0,)
    state_bounds = ((-2.0, 2.0),)

    def _rhs(self, state, p):
        (v,) = state
        return [p["mu"] - v * v]


class DecayTestModel(ModelSpec):
    """dV/dt = -k V."""

    id = "decay-test"
    state_names = ("V",)
    param_meta = (ParamMeta("k", 1.0, "positive", "estimated"),)
    output_maps = {"V": "identity"}
    state_scales = (1.0,)
    state_bounds = ((-2.0, 2.0),)

    def _rhs(self, state, p):
        (v,) = state
        return [-p["k"] * v]


LINEAR = register_model(LinearTestModel())
FOLD = register_model(FoldTestModel())
DECAY = register_model(DecayTestModel())


@pytest.fixture
def linear_model():
    return LINEAR


@pytest.fixture
def fold_model():
    return FOLD


@pytest.fixture
def decay_model():
    return DECAY
