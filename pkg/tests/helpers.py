# Shared builders for the test suite

import numpy as np


def smallScenarioDict(**overrides) -> dict:
    """Scenario small enough for fast end-to-end tests."""
    d = {
        "name": "small",
        "numSubcarriers": 4,
        "numTaps": 4,
        "numAntennas": 8,
        "numStreams": 2,
        "nodes": {
            "i": {"nrfTx": 4, "nrfRx": 2},
            "j": {"nrfRx": 2},
            "k": {"nrfTx": 2},
        },
        "sweepDb": [10],
        "trials": 2,
        "masterSeed": 11,
    }
    d.update(overrides)
    return d


def crandn(rng, *shape):
    """Circularly-symmetric complex normal samples with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
