"""Shared fixtures: the bundled three-obstacle workspace and a seeded generator."""

from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from apf_rcbf import Scenario, load_scenario


def bundled_data(name: str) -> Path:
    return Path(str(resources.files("apf_rcbf").joinpath("data", name)))


@pytest.fixture(scope="session")
def arena() -> Scenario:
    """The bundled three-obstacle workspace the demo config runs in."""
    return load_scenario(bundled_data("fig2_scenario.json"))


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
