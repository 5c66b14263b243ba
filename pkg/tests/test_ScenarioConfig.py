import json
import math

import numpy as np
import pytest

from bfc_simulator.errors import ConfigError
from bfc_simulator.scenario_config import (
    BUNDLED_SCENARIOS,
    ClusterStatistics,
    ScenarioConfig,
    applyOverrides,
    dbToLinear,
    loadConfig,
    parseGrid,
    readRawConfig,
)
from tests.helpers import smallScenarioDict


def _writeJson(tmp_path, d, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(d))
    return path


# ── bundled scenarios ─────────────────────────────────────────────────────────

class TestBundledScenarios:

    @pytest.mark.parametrize("name", BUNDLED_SCENARIOS)
    def testBundledScenarioLoads(self, name):
        config = loadConfig(name)
        assert config.name == name
        assert config.numAntennas == 32
        assert config.numStreams == 2
        assert config.trials == 100
        assert [p.snrIjDb for p in config.snrPoints] == [-10, -5, 0, 5, 10, 15, 20, 25, 30]

    def testScenarioOneDimensions(self):
        config = loadConfig("scenario-1")
        assert (config.numSubcarriers, config.numTaps) == (8, 8)
        dims = config.networkDimensions()
        assert (dims.i.nrfTx, dims.i.nrfRx) == (6, 2)
        assert dims.j.nrfRx == 2 and dims.k.nrfTx == 2
        assert config.snrIi == pytest.approx(1e8)
        assert config.ricianKappa == pytest.approx(10.0)

    def testScenarioTwoIsWideband(self):
        config = loadConfig("scenario-2")
        assert (config.numSubcarriers, config.numTaps) == (128, 128)
        assert config.networkDimensions().i.nrfTx == 8

    def testScenarioThreeOffsetsKiLink(self):
        config = loadConfig("scenario-3")
        assert [p.snrKiDb for p in config.snrPoints][:3] == [-40, -35, -30]

    def testDistinctSeeds(self):
        seeds = {loadConfig(name).masterSeed for name in BUNDLED_SCENARIOS}
        assert len(seeds) == len(BUNDLED_SCENARIOS)


# ── fromDict validation ───────────────────────────────────────────────────────

class TestValidation:

    def testSmallScenarioParses(self, smallConfig):
        assert smallConfig.numSubcarriers == 4
        assert smallConfig.nodes["j"].nrfTx == 2      # defaults to numStreams
        assert smallConfig.source == "small"

    @pytest.mark.parametrize("name", ["i", "k", "my-scenario"])
    def testNameSurvivesNodeValidation(self, name):
        config = ScenarioConfig.fromDict(smallScenarioDict(name=name))
        assert config.name == name
        assert set(config.nodes) == {"i", "j", "k"}

    def testFewerSubcarriersThanTapsRejected(self):
        with pytest.raises(ConfigError, match="cyclic-prefix assumption violated"):
            ScenarioConfig.fromDict(smallScenarioDict(numSubcarriers=2, numTaps=4))

    def testMissingRequiredFieldNamed(self):
        d = smallScenarioDict()
        del d["numTaps"]
        with pytest.raises(ConfigError, match="field 'numTaps'"):
            ScenarioConfig.fromDict(d)

    @pytest.mark.parametrize("key, value", [
        ("numSubcarriers", 4.5),
        ("numSubcarriers", "4"),
        ("trials", 0),
        ("trials", True),
        ("numStreams", 9),
        ("rolloff", 1.5),
        ("samplingRateHz", -1),
        ("siSeparationWavelengths", 0),
        ("sweepDb", []),
        ("sweepDb", [0, "x"]),
        ("cpOverhead", "yes"),
        ("snrIiDb", math.inf),
        ("name", ""),
    ])
    def testInvalidValueRejected(self, key, value):
        with pytest.raises(ConfigError):
            ScenarioConfig.fromDict(smallScenarioDict(**{key: value}))

    def testTooFewRfChainsRejected(self):
        nodes = {"i": {"nrfTx": 1}, "j": {}, "k": {}}
        with pytest.raises(ConfigError, match="nodes.i.nrfTx"):
            ScenarioConfig.fromDict(smallScenarioDict(nodes=nodes))

    def testMoreRfChainsThanAntennasRejected(self):
        nodes = {"i": {"nrfTx": 9}, "j": {}, "k": {}}
        with pytest.raises(ConfigError, match="nodes.i"):
            ScenarioConfig.fromDict(smallScenarioDict(nodes=nodes))

    def testUnknownNodeRejected(self):
        nodes = {"i": {}, "j": {}, "k": {}, "x": {}}
        with pytest.raises(ConfigError, match="unknown node"):
            ScenarioConfig.fromDict(smallScenarioDict(nodes=nodes))

    def testInvertedClusterRangeRejected(self):
        with pytest.raises(ConfigError, match="desiredChannel.numClusters"):
            ScenarioConfig.fromDict(
                smallScenarioDict(desiredChannel={"numClusters": [4, 2], "numRays": [1, 2]})
            )


# ── unit conversion ───────────────────────────────────────────────────────────

class TestUnits:

    def testDbToLinear(self):
        assert dbToLinear(0) == 1.0
        assert dbToLinear(30) == pytest.approx(1000.0)
        assert dbToLinear(-10) == pytest.approx(0.1)
        assert dbToLinear(None) == 0.0
        assert dbToLinear(-math.inf) == 0.0

    @pytest.mark.parametrize("snrIiDb", [None, -math.inf])
    def testSiCanBeSwitchedOff(self, snrIiDb):
        config = ScenarioConfig.fromDict(smallScenarioDict(snrIiDb=snrIiDb))
        assert config.snrIi == 0.0
        assert not config.siEnabled

    def testSnrPointsCarryLinearValues(self):
        config = ScenarioConfig.fromDict(smallScenarioDict(sweepDb=[0, 20], snrOffsetDb=10))
        point = config.snrPoints[1]
        assert point.index == 1
        assert point.snrIj == pytest.approx(100.0)
        assert point.snrKiDb == 10
        assert point.snrKi == pytest.approx(10.0)

    def testCpFactor(self):
        assert ScenarioConfig.fromDict(smallScenarioDict()).cpFactor == 1.0
        config = ScenarioConfig.fromDict(smallScenarioDict(cpOverhead=True))
        assert config.cpFactor == pytest.approx(0.8)

    def testSnrPointLookup(self, smallConfig):
        assert smallConfig.snrPointFor(10.0).index == 0
        with pytest.raises(ConfigError, match="not on the sweep grid"):
            smallConfig.snrPointFor(11.0)


# ── loading & overrides ───────────────────────────────────────────────────────

class TestLoading:

    def testLoadFromFile(self, tmp_path):
        path = _writeJson(tmp_path, smallScenarioDict())
        config = ScenarioConfig.fromJson(path)
        assert config.name == "small"
        assert config.source == str(path)

    def testInvalidJsonReportsLine(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "name": "x",\n  "numTaps": ,\n}')
        with pytest.raises(ConfigError, match="line 3"):
            readRawConfig(path)

    def testTopLevelMustBeObject(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="top level"):
            readRawConfig(path)

    def testUnknownNameRejected(self):
        with pytest.raises(ConfigError, match="not a bundled scenario"):
            readRawConfig("scenario-99")

    def testOverridesAreDottedAndJsonTyped(self):
        raw = applyOverrides(smallScenarioDict(), ["nodes.i.nrfTx=6", "snrIiDb=null", "name=renamed"])
        assert raw["nodes"]["i"]["nrfTx"] == 6
        assert raw["snrIiDb"] is None
        assert raw["name"] == "renamed"

    def testOverridesDoNotMutateInput(self):
        raw = smallScenarioDict()
        applyOverrides(raw, ["nodes.i.nrfTx=6"])
        assert raw["nodes"]["i"]["nrfTx"] == 4

    def testMalformedOverrideRejected(self):
        with pytest.raises(ConfigError):
            applyOverrides({}, ["trials"])

    def testPrecedence(self, tmp_path):
        path = _writeJson(tmp_path, smallScenarioDict(trials=5, masterSeed=1))
        config = loadConfig(
            path, overrides=["trials=7", "masterSeed=2"], seed=3, grid=[0.0, 5.0]
        )
        assert config.trials == 7
        assert config.masterSeed == 3
        assert config.sweepDb == (0.0, 5.0)


class TestParseGrid:

    def testCommaSeparated(self):
        assert parseGrid("0, 10,20") == [0.0, 10.0, 20.0]

    def testNegativeValues(self):
        assert parseGrid("-10,-5") == [-10.0, -5.0]

    @pytest.mark.parametrize("text", ["", ",", "1,abc"])
    def testInvalidGridRejected(self, text):
        with pytest.raises(ConfigError):
            parseGrid(text)


class TestClusterStatistics:

    def testDrawsStayInInclusiveRanges(self):
        stats = ClusterStatistics(numClusters=(1, 3), numRays=(2, 2))
        rng = np.random.default_rng(5)
        draws = [stats.draw(rng) for _ in range(300)]
        assert {c for c, _ in draws} == {1, 2, 3}
        assert {r for _, r in draws} == {2}

    def testDefaultsApplyWhenMissing(self, smallConfig):
        assert smallConfig.desiredChannel.numClusters == (1, 6)
        assert smallConfig.siChannel.numRays == (1, 6)
