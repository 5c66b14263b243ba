# Spectral-efficiency evaluation for the three-node full-duplex link and its benchmarks

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from bfc_simulator.bfc import (
    DesignOutput,
    LinkSnrs,
    NetworkDimensions,
    NodeCodebooks,
    designHybridEigen,
    eigenCombiner,
    eigenPrecoder,
)
from bfc_simulator.channel import SubcarrierChannels
from bfc_simulator.errors import DegenerateCombinerError, InvalidArgumentError
from bfc_simulator.hybrid import HybridBeamformer

logger = logging.getLogger(__name__)

_LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class LinkRate:
    """Per-subcarrier spectral efficiency of one link and its subcarrier average (bps/Hz)."""
    perSubcarrier: np.ndarray
    average: float


@dataclass(frozen=True, eq=False)
class RateReport:
    """Achieved rates of both links with the designed beamformers."""
    rateIj: float
    rateKi: float
    perSubcarrierIj: np.ndarray
    perSubcarrierKi: np.ndarray

    @property
    def sumFd(self) -> float:
        return self.rateIj + self.rateKi


@dataclass(frozen=True)
class BenchmarkReport:
    """SI-free ideal FD sums and their equal time-sharing HD counterparts."""
    idealFdDigital: float
    idealFdHybrid: float

    @property
    def hdDigital(self) -> float:
        return self.idealFdDigital / 2.0

    @property
    def hdHybrid(self) -> float:
        return self.idealFdHybrid / 2.0


# ============================================================
# PUBLIC API
# ============================================================

def spectralEfficiency(
    channel: np.ndarray,
    precoder: np.ndarray,
    combiner: np.ndarray,
    snr: float,
    interference: np.ndarray | None = None,
    snrInterference: float = 0.0,
) -> np.ndarray:
    """
    log2 det(I + snr A A^H (W^H Q W)^-1) per subcarrier, with A = W^H H F.

    Q = I + snrInterference * G G^H where G = H_int F_int is the interfering signal at
    the receive array (`interference`, shaped (U, Nr, Ns_int)). Stacks are (U, ., .).
    """
    if snr < 0 or snrInterference < 0:
        raise InvalidArgumentError(f"SNRs must be >= 0, got {snr} and {snrInterference}")
    wH = combiner.conj().swapaxes(-1, -2)
    if np.any(np.linalg.matrix_rank(combiner) < combiner.shape[-1]):
        raise DegenerateCombinerError("Combiner is rank-deficient on at least one subcarrier")

    noise = wH @ combiner
    if interference is not None and snrInterference > 0:
        seen = wH @ interference
        noise = noise + snrInterference * (seen @ seen.conj().swapaxes(-1, -2))

    try:
        chol = np.linalg.cholesky(noise)
    except np.linalg.LinAlgError as e:
        raise DegenerateCombinerError(f"W^H Q W is not positive definite: {e}") from e

    whitened = np.linalg.solve(chol, wH @ channel @ precoder)
    gram = np.eye(whitened.shape[-2]) + snr * (whitened @ whitened.conj().swapaxes(-1, -2))
    _, logdet = np.linalg.slogdet(gram)
    return logdet / _LN2


def siFreeRate(
    channel: np.ndarray, precoder: HybridBeamformer, combiner: HybridBeamformer, snr: float
) -> LinkRate:
    """Rate of a link whose receiver sees only noise."""
    perSubcarrier = spectralEfficiency(channel, precoder.effective, combiner.effective, snr)
    return LinkRate(perSubcarrier, float(np.mean(perSubcarrier)))


def rateIj(
    hIj: np.ndarray, precoderI: HybridBeamformer, combinerJ: HybridBeamformer, snrIj: float
) -> LinkRate:
    """Rate from i to j; j is half-duplex and sees no SI."""
    return siFreeRate(hIj, precoderI, combinerJ, snrIj)


def rateKi(
    hKi: np.ndarray,
    hIi: np.ndarray,
    precoderK: HybridBeamformer,
    combinerI: HybridBeamformer,
    precoderI: HybridBeamformer,
    snrKi: float,
    snrIi: float,
) -> LinkRate:
    """Rate from k to i with residual SI from i's own transmission treated as noise."""
    perSubcarrier = spectralEfficiency(
        hKi,
        precoderK.effective,
        combinerI.effective,
        snrKi,
        interference=np.asarray(hIi) @ precoderI.effective,
        snrInterference=snrIi,
    )
    return LinkRate(perSubcarrier, float(np.mean(perSubcarrier)))


def achievedRates(
    hKi: SubcarrierChannels,
    hIj: SubcarrierChannels,
    hIi: SubcarrierChannels,
    design: DesignOutput,
    snrs: LinkSnrs,
    cpFactor: float = 1.0,
) -> RateReport:
    """Rates of both links with the designed beamformers, optionally scaled by CP overhead."""
    ij = rateIj(hIj.subchannels, design.precoderI, design.combinerJ, snrs.snrIj)
    ki = rateKi(
        hKi.subchannels,
        hIi.subchannels,
        design.precoderK,
        design.combinerI,
        design.precoderI,
        snrs.snrKi,
        snrs.snrIi,
    )
    return RateReport(
        rateIj=cpFactor * ij.average,
        rateKi=cpFactor * ki.average,
        perSubcarrierIj=ij.perSubcarrier,
        perSubcarrierKi=ki.perSubcarrier,
    )


def benchmarks(
    hKi: SubcarrierChannels,
    hIj: SubcarrierChannels,
    dims: NetworkDimensions,
    snrs: LinkSnrs,
    codebooks: NodeCodebooks,
    cpFactor: float = 1.0,
) -> BenchmarkReport:
    """Ideal SI-free FD sum rates with fully-digital and FS-OMP hybrid eigenbeamformers."""
    digitalK = HybridBeamformer.fullyDigital(eigenPrecoder(hKi.subchannels, dims.k.ns))
    digitalWi = HybridBeamformer.fullyDigital(eigenCombiner(hKi.subchannels, dims.k.ns))
    digitalI = HybridBeamformer.fullyDigital(eigenPrecoder(hIj.subchannels, dims.i.ns))
    digitalWj = HybridBeamformer.fullyDigital(eigenCombiner(hIj.subchannels, dims.i.ns))
    precoderK, combinerJ, precoderI, combinerI = designHybridEigen(hKi, hIj, dims, codebooks)

    idealDigital = (
        siFreeRate(hIj.subchannels, digitalI, digitalWj, snrs.snrIj).average
        + siFreeRate(hKi.subchannels, digitalK, digitalWi, snrs.snrKi).average
    )
    idealHybrid = (
        siFreeRate(hIj.subchannels, precoderI, combinerJ, snrs.snrIj).average
        + siFreeRate(hKi.subchannels, precoderK, combinerI, snrs.snrKi).average
    )
    return BenchmarkReport(
        idealFdDigital=cpFactor * idealDigital,
        idealFdHybrid=cpFactor * idealHybrid,
    )
