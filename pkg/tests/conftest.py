import numpy as np
import pytest
from hypothesis import settings

from pfcohesive import catalog

settings.register_profile("default", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("default")


def t2(t):
    return np.asarray(t, dtype=float) ** 2


def two_t(t):
    return 2.0 * np.asarray(t, dtype=float)


@pytest.fixture(scope="session")
def linear_entry():
    return catalog.get("linear", {"k": 1.0})


@pytest.fixture(scope="session")
def linear_model(linear_entry):
    return linear_entry.analytic_models[0].model


@pytest.fixture(scope="session")
def dugdale_model():
    return catalog.get("dugdale", {"k": 1.0}).analytic_models[0].model


@pytest.fixture(scope="session")
def hyperbolic_entry():
    return catalog.get("hyperbolic", {"k": 1.0})


@pytest.fixture(scope="session")
def logarithmic_entry():
    return catalog.get("logarithmic", {"k": 1.0})


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
