# Scenario dataclasses and JSON loader for the full-duplex beamforming-cancellation simulator

from __future__ import annotations

import copy
import json
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from bfc_simulator.bfc import NetworkDimensions, NodeCodebooks, NodeDimensions
from bfc_simulator.errors import ConfigError

logger = logging.getLogger(__name__)

BUNDLED_SCENARIOS = ("scenario-1", "scenario-2", "scenario-3")
VALID_NODES = ("i", "j", "k")

DEFAULT_NUM_ANTENNAS = 32
DEFAULT_NUM_STREAMS = 2
DEFAULT_SNR_II_DB = 80.0
DEFAULT_RICIAN_KAPPA_DB = 10.0
DEFAULT_SWEEP_DB = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
DEFAULT_TRIALS = 100
DEFAULT_DESIRED_CLUSTERS = (1, 6)
DEFAULT_DESIRED_RAYS = (1, 10)
DEFAULT_SI_CLUSTERS = (1, 3)
DEFAULT_SI_RAYS = (1, 6)

_MISSING = object()


def dbToLinear(db: float | None) -> float:
    """dB to linear power ratio; None and -inf map to 0."""
    if db is None or db == -math.inf:
        return 0.0
    return 10.0 ** (db / 10.0)


# ============================================================
# Field parsing helpers
# ============================================================

def _get(d: dict, key: str, source: str, path: str, default: Any = _MISSING) -> Any:
    if not isinstance(d, dict):
        raise ConfigError(f"expected an object, got {type(d).__name__}", source, path)
    if key in d:
        return d[key]
    if default is _MISSING:
        raise ConfigError("required field is missing", source, f"{path}.{key}".lstrip("."))
    return default


def _integer(value: Any, source: str, path: str, minimum: int | None = None) -> int:
    if (
        isinstance(value, bool)
        or not isinstance(value, (int, float))
        or not math.isfinite(value)
        or value != int(value)
    ):
        raise ConfigError(f"expected an integer, got {value!r}", source, path)
    value = int(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"must be >= {minimum}, got {value}", source, path)
    return value


def _number(value: Any, source: str, path: str, allowInfinite: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", source, path)
    value = float(value)
    if math.isnan(value) or (math.isinf(value) and not allowInfinite):
        raise ConfigError(f"expected a finite number, got {value}", source, path)
    return value


def _intRange(value: Any, source: str, path: str) -> tuple[int, int]:
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError(f"expected [low, high], got {value!r}", source, path)
    low = _integer(value[0], source, path, minimum=1)
    high = _integer(value[1], source, path, minimum=1)
    if low > high:
        raise ConfigError(f"low {low} exceeds high {high}", source, path)
    return low, high


# ============================================================
# Config Data Structures
# ============================================================

@dataclass(frozen=True)
class RfChains:
    """RF-chain counts of one node."""
    nrfTx: int
    nrfRx: int

    @classmethod
    def fromDict(cls, d: dict, numStreams: int, source: str, path: str) -> RfChains:
        counts = {}
        for key in ("nrfTx", "nrfRx"):
            counts[key] = _integer(
                _get(d, key, source, path, numStreams), source, f"{path}.{key}", minimum=1
            )
            if counts[key] < numStreams:
                raise ConfigError(
                    f"{counts[key]} RF chain(s) cannot carry {numStreams} stream(s)",
                    source,
                    f"{path}.{key}",
                )
        return cls(**counts)


@dataclass(frozen=True)
class ClusterStatistics:
    """Inclusive uniform ranges for per-trial cluster and ray counts."""
    numClusters: tuple[int, int]
    numRays: tuple[int, int]

    @classmethod
    def fromDict(
        cls, d: dict, defaults: tuple[tuple[int, int], tuple[int, int]], source: str, path: str
    ) -> ClusterStatistics:
        return cls(
            numClusters=_intRange(
                _get(d, "numClusters", source, path, list(defaults[0])),
                source,
                f"{path}.numClusters",
            ),
            numRays=_intRange(
                _get(d, "numRays", source, path, list(defaults[1])), source, f"{path}.numRays"
            ),
        )

    def draw(self, rng: np.random.Generator) -> tuple[int, int]:
        """Draw (numClusters, numRays) for one channel realization."""
        numClusters = int(rng.integers(self.numClusters[0], self.numClusters[1], endpoint=True))
        numRays = int(rng.integers(self.numRays[0], self.numRays[1], endpoint=True))
        return numClusters, numRays


@dataclass(frozen=True)
class SnrPoint:
    """One sweep point: grid index plus link SNRs in dB and linear units."""
    index: int
    snrIjDb: float
    snrKiDb: float
    snrIj: float
    snrKi: float


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete scenario loaded from JSON, with SNRs converted to linear units."""
    name: str
    numSubcarriers: int
    numTaps: int
    nodes: dict[str, RfChains]
    numAntennas: int = DEFAULT_NUM_ANTENNAS
    numStreams: int = DEFAULT_NUM_STREAMS
    snrIiDb: float | None = DEFAULT_SNR_II_DB
    ricianKappaDb: float = DEFAULT_RICIAN_KAPPA_DB
    snrOffsetDb: float = 0.0
    sweepDb: tuple[float, ...] = DEFAULT_SWEEP_DB
    trials: int = DEFAULT_TRIALS
    masterSeed: int = 0
    samplingRateHz: float = 2e9
    rolloff: float = 1.0
    angleSpreadStd: float = 0.2
    siSeparationWavelengths: float = 10.0
    cpOverhead: bool = False
    desiredChannel: ClusterStatistics = field(
        default_factory=lambda: ClusterStatistics(DEFAULT_DESIRED_CLUSTERS, DEFAULT_DESIRED_RAYS)
    )
    siChannel: ClusterStatistics = field(
        default_factory=lambda: ClusterStatistics(DEFAULT_SI_CLUSTERS, DEFAULT_SI_RAYS)
    )
    source: str = "<dict>"

    # Linear-unit views; derived once at load time.
    snrIi: float = field(init=False)
    ricianKappa: float = field(init=False)
    snrPoints: tuple[SnrPoint, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "snrIi", dbToLinear(self.snrIiDb))
        object.__setattr__(self, "ricianKappa", dbToLinear(self.ricianKappaDb))
        points = tuple(
            SnrPoint(
                index=idx,
                snrIjDb=snrIjDb,
                snrKiDb=snrIjDb - self.snrOffsetDb,
                snrIj=dbToLinear(snrIjDb),
                snrKi=dbToLinear(snrIjDb - self.snrOffsetDb),
            )
            for idx, snrIjDb in enumerate(self.sweepDb)
        )
        object.__setattr__(self, "snrPoints", points)

    @property
    def cyclicPrefixLength(self) -> int:
        return self.numTaps // 4

    @property
    def cpFactor(self) -> float:
        """U / (U + N_CP) when CP overhead is accounted, otherwise 1."""
        if not self.cpOverhead:
            return 1.0
        return self.numSubcarriers / (self.numSubcarriers + self.cyclicPrefixLength)

    @property
    def siEnabled(self) -> bool:
        return self.snrIi > 0

    def networkDimensions(self) -> NetworkDimensions:
        def node(name: str) -> NodeDimensions:
            chains = self.nodes[name]
            return NodeDimensions(
                nt=self.numAntennas,
                nr=self.numAntennas,
                nrfTx=chains.nrfTx,
                nrfRx=chains.nrfRx,
                ns=self.numStreams,
            )

        return NetworkDimensions(i=node("i"), j=node("j"), k=node("k"))

    def codebooks(self) -> NodeCodebooks:
        return NodeCodebooks.dft(self.numAntennas)

    def snrPointFor(self, snrIjDb: float) -> SnrPoint:
        """Grid point whose snrIjDb matches; its index keeps per-trial seeds stable."""
        for point in self.snrPoints:
            if math.isclose(point.snrIjDb, snrIjDb, abs_tol=1e-9):
                return point
        raise ConfigError(
            f"SNR {snrIjDb} dB is not on the sweep grid {list(self.sweepDb)}", self.source, "sweepDb"
        )

    @classmethod
    def fromDict(cls, d: dict, source: str = "<dict>") -> ScenarioConfig:
        """Parse and validate a raw scenario document."""
        name = _get(d, "name", source, "")
        if not isinstance(name, str) or not name:
            raise ConfigError(f"expected a non-empty string, got {name!r}", source, "name")

        numSubcarriers = _integer(_get(d, "numSubcarriers", source, ""), source, "numSubcarriers", 1)
        numTaps = _integer(_get(d, "numTaps", source, ""), source, "numTaps", 1)
        if numSubcarriers < numTaps:
            raise ConfigError(
                f"cyclic-prefix assumption violated: numSubcarriers (U={numSubcarriers}) "
                f"must be >= numTaps (D={numTaps})",
                source,
                "numSubcarriers",
            )

        numStreams = _integer(
            _get(d, "numStreams", source, "", DEFAULT_NUM_STREAMS), source, "numStreams", 1
        )
        numAntennas = _integer(
            _get(d, "numAntennas", source, "", DEFAULT_NUM_ANTENNAS), source, "numAntennas", 1
        )
        if numAntennas < numStreams:
            raise ConfigError(
                f"{numAntennas} antenna(s) cannot carry {numStreams} stream(s)", source, "numAntennas"
            )

        rawNodes = _get(d, "nodes", source, "")
        if not isinstance(rawNodes, dict):
            raise ConfigError(f"expected an object, got {rawNodes!r}", source, "nodes")
        unknown = set(rawNodes) - set(VALID_NODES)
        if unknown:
            raise ConfigError(
                f"unknown node(s) {sorted(unknown)}. Must be among: {list(VALID_NODES)}",
                source,
                "nodes",
            )
        nodes = {
            nodeName: RfChains.fromDict(
                rawNodes.get(nodeName, {}), numStreams, source, f"nodes.{nodeName}"
            )
            for nodeName in VALID_NODES
        }
        for nodeName, chains in nodes.items():
            if chains.nrfTx > numAntennas or chains.nrfRx > numAntennas:
                raise ConfigError(
                    f"more RF chains than the {numAntennas} antennas", source, f"nodes.{nodeName}"
                )

        snrIiDb = _get(d, "snrIiDb", source, "", DEFAULT_SNR_II_DB)
        if snrIiDb is not None:
            snrIiDb = _number(snrIiDb, source, "snrIiDb", allowInfinite=True)
            if snrIiDb == math.inf:
                raise ConfigError("must be finite, -Infinity or null", source, "snrIiDb")

        sweepDb = _get(d, "sweepDb", source, "", list(DEFAULT_SWEEP_DB))
        if not isinstance(sweepDb, list) or not sweepDb:
            raise ConfigError(f"expected a non-empty list, got {sweepDb!r}", source, "sweepDb")
        sweepDb = tuple(_number(v, source, f"sweepDb[{n}]") for n, v in enumerate(sweepDb))

        rolloff = _number(_get(d, "rolloff", source, "", 1.0), source, "rolloff")
        if not 0.0 <= rolloff <= 1.0:
            raise ConfigError(f"must lie in [0, 1], got {rolloff}", source, "rolloff")
        samplingRateHz = _number(_get(d, "samplingRateHz", source, "", 2e9), source, "samplingRateHz")
        if samplingRateHz <= 0:
            raise ConfigError(f"must be positive, got {samplingRateHz}", source, "samplingRateHz")
        separation = _number(
            _get(d, "siSeparationWavelengths", source, "", 10.0), source, "siSeparationWavelengths"
        )
        if separation <= 0:
            raise ConfigError(
                f"must be positive, got {separation}", source, "siSeparationWavelengths"
            )
        angleSpreadStd = _number(_get(d, "angleSpreadStd", source, "", 0.2), source, "angleSpreadStd")
        if angleSpreadStd < 0:
            raise ConfigError(f"must be >= 0, got {angleSpreadStd}", source, "angleSpreadStd")

        cpOverhead = _get(d, "cpOverhead", source, "", False)
        if not isinstance(cpOverhead, bool):
            raise ConfigError(f"expected true or false, got {cpOverhead!r}", source, "cpOverhead")

        config = cls(
            name=name,
            numSubcarriers=numSubcarriers,
            numTaps=numTaps,
            nodes=nodes,
            numAntennas=numAntennas,
            numStreams=numStreams,
            snrIiDb=snrIiDb,
            ricianKappaDb=_number(
                _get(d, "ricianKappaDb", source, "", DEFAULT_RICIAN_KAPPA_DB), source, "ricianKappaDb"
            ),
            snrOffsetDb=_number(_get(d, "snrOffsetDb", source, "", 0.0), source, "snrOffsetDb"),
            sweepDb=sweepDb,
            trials=_integer(_get(d, "trials", source, "", DEFAULT_TRIALS), source, "trials", 1),
            masterSeed=_integer(_get(d, "masterSeed", source, "", 0), source, "masterSeed", 0),
            samplingRateHz=samplingRateHz,
            rolloff=rolloff,
            angleSpreadStd=angleSpreadStd,
            siSeparationWavelengths=separation,
            cpOverhead=cpOverhead,
            desiredChannel=ClusterStatistics.fromDict(
                _get(d, "desiredChannel", source, "", {}),
                (DEFAULT_DESIRED_CLUSTERS, DEFAULT_DESIRED_RAYS),
                source,
                "desiredChannel",
            ),
            siChannel=ClusterStatistics.fromDict(
                _get(d, "siChannel", source, "", {}),
                (DEFAULT_SI_CLUSTERS, DEFAULT_SI_RAYS),
                source,
                "siChannel",
            ),
            source=source,
        )
        return config

    @classmethod
    def fromJson(cls, path: str | Path) -> ScenarioConfig:
        """Load and parse a scenario from a JSON file."""
        raw, source = readRawConfig(path)
        return cls.fromDict(raw, source)


# ============================================================
# PUBLIC API
# ============================================================

def _parseJson(text: str, source: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}", source) from e
    if not isinstance(data, dict):
        raise ConfigError(f"top level must be an object, got {type(data).__name__}", source)
    return data


def readRawConfig(pathOrName: str | Path) -> tuple[dict, str]:
    """Read a scenario document from a file, or a bundled scenario by name."""
    path = Path(pathOrName)
    if path.is_file():
        logger.info(f"Loading scenario from {path}")
        try:
            text = path.read_text()
        except OSError as e:
            raise ConfigError(f"cannot read file: {e}", str(path)) from e
        return _parseJson(text, str(path)), str(path)

    name = str(pathOrName)
    if name in BUNDLED_SCENARIOS:
        logger.info(f"Loading bundled scenario '{name}'")
        text = resources.files("bfc_simulator.scenarios").joinpath(f"{name}.json").read_text()
        return _parseJson(text, name), name

    raise ConfigError(
        f"no such file, and not a bundled scenario. Bundled: {list(BUNDLED_SCENARIOS)}", name
    )


def _parseOverrideValue(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def applyOverrides(raw: dict, overrides: list[str] | tuple[str, ...]) -> dict:
    """
    Apply dotted `key=value` overrides to a copy of a raw scenario document.

    Values are parsed as JSON when possible and kept as strings otherwise.
    """
    result = copy.deepcopy(raw)
    for override in overrides:
        key, sep, text = override.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"override '{override}' is not of the form key=value", "--set")
        parts = key.split(".")
        target = result
        for part in parts[:-1]:
            child = target.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"cannot descend into non-object '{part}'", "--set", key)
            target = child
        target[parts[-1]] = _parseOverrideValue(text)
        logger.debug(f"Override {key} = {target[parts[-1]]!r}")
    return result


def parseGrid(text: str) -> list[float]:
    """Comma-separated dB values, e.g. '0,10,20'."""
    values = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            values.append(float(item))
        except ValueError as e:
            raise ConfigError(f"'{item}' is not a number", "--grid") from e
    if not values:
        raise ConfigError("grid must contain at least one value", "--grid")
    return values


def loadConfig(
    pathOrName: str | Path,
    overrides: list[str] | tuple[str, ...] = (),
    seed: int | None = None,
    trials: int | None = None,
    grid: list[float] | None = None,
) -> ScenarioConfig:
    """
    Load, override and validate a scenario.

    Precedence from lowest to highest: file values, `overrides`, then the
    seed/trials/grid arguments.
    """
    raw, source = readRawConfig(pathOrName)
    raw = applyOverrides(raw, overrides)
    if seed is not None:
        raw["masterSeed"] = seed
    if trials is not None:
        raw["trials"] = trials
    if grid is not None:
        raw["sweepDb"] = list(grid)

    config = ScenarioConfig.fromDict(raw, source)
    logger.info(
        f"Loaded scenario '{config.name}': U={config.numSubcarriers}, D={config.numTaps}, "
        f"{len(config.snrPoints)} SNR point(s) x {config.trials} trial(s)"
    )
    return config
