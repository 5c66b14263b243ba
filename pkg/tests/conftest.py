import numpy as np
import pytest

from bfc_simulator.scenario_config import ScenarioConfig
from tests.helpers import smallScenarioDict


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def smallConfig():
    return ScenarioConfig.fromDict(smallScenarioDict(), source="small")
