# Seeded Monte Carlo harness for the full-duplex beamforming-cancellation scenarios

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from bfc_simulator.bfc import DesignDiagnostics, LinkSnrs, designFull
from bfc_simulator.channel import (
    ArrayGeometry,
    ChannelTaps,
    ClusterParams,
    SiChannelParams,
    SubcarrierChannels,
    genClusteredTaps,
    genSiTaps,
    nodeSiGeometry,
    tapsToSubcarriers,
)
from bfc_simulator.errors import InvalidArgumentError
from bfc_simulator.metrics import BenchmarkReport, RateReport, achievedRates, benchmarks
from bfc_simulator.sanity_monitor import Check, CheckSeverity, SanityMonitor
from bfc_simulator.scenario_config import ScenarioConfig, SnrPoint
from bfc_simulator.sweep_table import SweepTable
from bfc_simulator.trial_timer import TrialTimer

logger = logging.getLogger(__name__)

MAX_WORKERS_ENV = "BFCSIM_MAX_WORKERS"
PROGRESS_INTERVAL_S = 5.0
VALID_LINKS = ("ki", "ij", "ii")

# Rates below this are numerical noise around zero, not negative
_RATE_FLOOR = -1e-12


@dataclass(frozen=True, eq=False)
class TrialChannels:
    """One trial's channel draw, in both tap and subcarrier domains."""
    kiTaps: ChannelTaps
    ijTaps: ChannelTaps
    iiTaps: ChannelTaps
    ki: SubcarrierChannels
    ij: SubcarrierChannels
    ii: SubcarrierChannels

    def link(self, name: str, domain: str = "subcarriers") -> np.ndarray:
        """Raw (K, Nr, Nt) stack of one link, for dumps."""
        if name not in VALID_LINKS:
            raise InvalidArgumentError(f"Unknown link '{name}'. Must be one of: {list(VALID_LINKS)}")
        if domain == "taps":
            return getattr(self, f"{name}Taps").taps
        if domain == "subcarriers":
            return getattr(self, name).subchannels
        raise InvalidArgumentError(f"Unknown domain '{domain}'. Must be 'taps' or 'subcarriers'")


@dataclass(frozen=True, eq=False)
class TrialResult:
    """Rates, benchmarks and design diagnostics of one (snr point, trial)."""
    trialIndex: int
    snrPoint: SnrPoint
    rates: RateReport
    benchmarks: BenchmarkReport
    diagnostics: DesignDiagnostics

    def values(self) -> tuple[float, ...]:
        """Scalar results in output-column order."""
        return (
            self.rates.rateIj,
            self.rates.rateKi,
            self.rates.sumFd,
            self.benchmarks.idealFdDigital,
            self.benchmarks.idealFdHybrid,
            self.benchmarks.hdDigital,
            self.benchmarks.hdHybrid,
        )


# ============================================================
# Channel drawing
# ============================================================

def deriveTrialSeed(masterSeed: int, snrIndex: int, trialIndex: int) -> int:
    """
    Per-trial 64-bit seed: first word of numpy's SeedSequence over
    [masterSeed, snrIndex, trialIndex]. Independent of execution order.
    """
    if min(masterSeed, snrIndex, trialIndex) < 0:
        raise InvalidArgumentError(
            f"Seed inputs must be >= 0, got {masterSeed}, {snrIndex}, {trialIndex}"
        )
    sequence = np.random.SeedSequence([masterSeed, snrIndex, trialIndex])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


@lru_cache(maxsize=8)
def _siGeometry(numAntennas: int, separation: float) -> tuple[ArrayGeometry, ArrayGeometry]:
    return nodeSiGeometry(numAntennas, separation)


def _clusterParams(config: ScenarioConfig, counts: tuple[int, int]) -> ClusterParams:
    return ClusterParams(
        numClusters=counts[0],
        numRays=counts[1],
        numTaps=config.numTaps,
        angleSpreadStd=config.angleSpreadStd,
        samplingRateHz=config.samplingRateHz,
        rolloff=config.rolloff,
    )


def drawChannels(config: ScenarioConfig, rng: np.random.Generator) -> TrialChannels:
    """Draw H_ki, H_ij and (when SI is on) H_ii, in that order, from one generator."""
    n = config.numAntennas
    kiTaps = genClusteredTaps(_clusterParams(config, config.desiredChannel.draw(rng)), n, n, rng)
    ijTaps = genClusteredTaps(_clusterParams(config, config.desiredChannel.draw(rng)), n, n, rng)

    if config.siEnabled:
        geometryTx, geometryRx = _siGeometry(n, config.siSeparationWavelengths)
        siParams = SiChannelParams(
            ricianKappa=config.ricianKappa,
            nlosParams=_clusterParams(config, config.siChannel.draw(rng)),
            geometryTx=geometryTx,
            geometryRx=geometryRx,
        )
        iiTaps = genSiTaps(siParams, rng)
    else:
        iiTaps = ChannelTaps(np.zeros((config.numTaps, n, n), dtype=complex))

    u = config.numSubcarriers
    return TrialChannels(
        kiTaps=kiTaps,
        ijTaps=ijTaps,
        iiTaps=iiTaps,
        ki=tapsToSubcarriers(kiTaps, u),
        ij=tapsToSubcarriers(ijTaps, u),
        ii=tapsToSubcarriers(iiTaps, u),
    )


def trialChannels(config: ScenarioConfig, snrPoint: SnrPoint, trialIndex: int) -> TrialChannels:
    """The exact channel draw runTrial sees for (snrPoint, trialIndex)."""
    seed = deriveTrialSeed(config.masterSeed, snrPoint.index, trialIndex)
    return drawChannels(config, np.random.default_rng(seed))


# ============================================================
# PUBLIC API
# ============================================================

def runTrial(config: ScenarioConfig, snrPoint: SnrPoint, trialIndex: int) -> TrialResult:
    """Draw channels, run the full design and evaluate rates and benchmarks."""
    channels = trialChannels(config, snrPoint, trialIndex)
    dims = config.networkDimensions()
    codebooks = config.codebooks()
    snrs = LinkSnrs(snrIj=snrPoint.snrIj, snrKi=snrPoint.snrKi, snrIi=config.snrIi)

    design = designFull(channels.ki, channels.ij, channels.ii, dims, snrs, codebooks)
    rates = achievedRates(channels.ki, channels.ij, channels.ii, design, snrs, config.cpFactor)
    bench = benchmarks(channels.ki, channels.ij, dims, snrs, codebooks, config.cpFactor)
    logger.debug(
        f"Trial {trialIndex} @ {snrPoint.snrIjDb:g} dB: sumFd={rates.sumFd:.3f}, "
        f"hdHybrid={bench.hdHybrid:.3f}"
    )
    return TrialResult(
        trialIndex=trialIndex,
        snrPoint=snrPoint,
        rates=rates,
        benchmarks=bench,
        diagnostics=design.diagnostics,
    )


def defaultSanityMonitor() -> SanityMonitor:
    """Checks applied to every trial of a sweep."""
    monitor = SanityMonitor()
    monitor.register(Check(
        "NONFINITE_RESULT", CheckSeverity.HIGH,
        lambda r: f"non-finite value in trial {r.trialIndex} at {r.snrPoint.snrIjDb:g} dB: {r.values()}",
        condition=lambda r: not all(math.isfinite(v) for v in r.values()),
    ))
    monitor.register(Check(
        "NEGATIVE_RATE", CheckSeverity.HIGH,
        lambda r: f"negative rate in trial {r.trialIndex} at {r.snrPoint.snrIjDb:g} dB: {r.values()}",
        condition=lambda r: min(r.values()) < _RATE_FLOOR,
    ))
    monitor.register(Check(
        "BENCHMARK_IDENTITY", CheckSeverity.HIGH,
        lambda r: f"HD benchmark is not half the ideal FD one in trial {r.trialIndex}",
        condition=lambda r: (
            r.benchmarks.hdDigital * 2 != r.benchmarks.idealFdDigital
            or r.benchmarks.hdHybrid * 2 != r.benchmarks.idealFdHybrid
        ),
    ))
    monitor.register(Check(
        "FD_BELOW_HD", CheckSeverity.LOW,
        lambda r: (
            f"achieved sumFd {r.rates.sumFd:.3f} below hybrid HD {r.benchmarks.hdHybrid:.3f} "
            f"in trial {r.trialIndex} at {r.snrPoint.snrIjDb:g} dB"
        ),
        condition=lambda r: r.rates.sumFd < r.benchmarks.hdHybrid,
    ))
    return monitor


def resolveWorkerCount(requested: int | None = None) -> int:
    """Requested count (default: CPU count), capped by BFCSIM_MAX_WORKERS when set."""
    workers = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get(MAX_WORKERS_ENV)
    if cap:
        try:
            workers = min(workers, int(cap))
        except ValueError as e:
            raise InvalidArgumentError(f"{MAX_WORKERS_ENV}={cap!r} is not an integer") from e
    if workers < 1:
        raise InvalidArgumentError(f"Worker count must be >= 1, got {workers}")
    return workers


def runSweep(
    config: ScenarioConfig,
    workers: int | None = None,
    snrPoints: tuple[SnrPoint, ...] | None = None,
    monitor: SanityMonitor | None = None,
) -> SweepTable:
    """
    Run every (snr point, trial) pair and collect the results in (snr, trial) order.

    Trials run on a thread pool; each trial seeds its own generator, so the
    table does not depend on scheduling.
    """
    points = snrPoints if snrPoints is not None else config.snrPoints
    if not points:
        raise InvalidArgumentError("Sweep grid is empty")
    monitor = monitor if monitor is not None else defaultSanityMonitor()
    workers = resolveWorkerCount(workers)
    jobs = [(point, trial) for point in points for trial in range(config.trials)]
    timer = TrialTimer()

    def timedTrial(job: tuple[SnrPoint, int]) -> TrialResult:
        with timer.measure():
            return runTrial(config, *job)

    logger.info(
        f"Sweep '{config.name}': {len(points)} SNR point(s) x {config.trials} trial(s) "
        f"on {workers} worker(s)"
    )
    table = SweepTable(config.name)
    start = time.monotonic()
    lastReport = start
    with ThreadPoolExecutor(max_workers=workers) as pool:
        try:
            for result in pool.map(timedTrial, jobs):
                monitor.evaluate(result)
                table.addResult(result)
                now = time.monotonic()
                if now - lastReport >= PROGRESS_INTERVAL_S:
                    logger.info(
                        f"Progress {len(table)}/{len(jobs)} trials collected, "
                        f"{timer.count} finished | "
                        f"window avg: {timer.avg * 1000:.1f}ms | p95: {timer.p95 * 1000:.1f}ms"
                    )
                    timer.reset()
                    lastReport = now
        except BaseException:
            pool.shutdown(wait=False, cancel_futures=True)
            raise

    monitor.logSummary(len(jobs))
    logger.info(
        f"Sweep '{config.name}' finished {timer.count} trial(s) in {time.monotonic() - start:.1f}s"
    )
    return table
