# Channel generation for the full-duplex beamforming-cancellation simulator:
# clustered desired channels, the Rician SI channel and the tap-to-subcarrier DFT

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import integrate

from bfc_simulator.errors import InvalidArgumentError, InvalidGeometryError

logger = logging.getLogger(__name__)

ULA_SPACING_WAVELENGTHS = 0.5
DEFAULT_ANGLE_SPREAD_STD = 0.2      # radians, per-ray Laplacian spread around the cluster mean
DEFAULT_SAMPLING_RATE_HZ = 2e9
DEFAULT_ROLLOFF = 1.0

# |t/Ts| closer than this to a removable singularity uses the analytic limit
_SINGULARITY_TOL = 1e-10


# ============================================================
# Domain Types
# ============================================================

@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    """Element positions of one antenna array, in wavelengths."""
    numElements: int
    elementPositions: np.ndarray    # (numElements, 3)

    def __post_init__(self):
        positions = np.asarray(self.elementPositions, dtype=float)
        if self.numElements < 1:
            raise InvalidGeometryError(f"Array needs at least one element, got {self.numElements}")
        if positions.shape != (self.numElements, 3):
            raise InvalidGeometryError(
                f"Expected positions of shape ({self.numElements}, 3), got {positions.shape}"
            )
        if not np.all(np.isfinite(positions)):
            raise InvalidGeometryError("Element positions must be finite")
        object.__setattr__(self, "elementPositions", positions)

    @classmethod
    def horizontalUla(
        cls, numElements: int, offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    ) -> ArrayGeometry:
        """Half-wavelength ULA along x, centered on `offset`."""
        if numElements < 1:
            raise InvalidGeometryError(f"Array needs at least one element, got {numElements}")
        x = ULA_SPACING_WAVELENGTHS * (np.arange(numElements) - (numElements - 1) / 2)
        positions = np.zeros((numElements, 3))
        positions[:, 0] = x
        positions += np.asarray(offset, dtype=float)
        return cls(numElements, positions)


def nodeSiGeometry(numAntennas: int, separationWavelengths: float) -> tuple[ArrayGeometry, ArrayGeometry]:
    """Transmit and receive ULAs of the full-duplex node, vertically stacked."""
    if not math.isfinite(separationWavelengths) or separationWavelengths <= 0:
        raise InvalidGeometryError(
            f"Vertical separation must be positive and finite, got {separationWavelengths}"
        )
    tx = ArrayGeometry.horizontalUla(numAntennas)
    rx = ArrayGeometry.horizontalUla(numAntennas, offset=(0.0, 0.0, separationWavelengths))
    return tx, rx


@dataclass(frozen=True)
class ClusterParams:
    """
    Statistics of one clustered channel realization.

    Cluster and ray counts are fixed here; the sim draws them per trial.
    Cluster mean angles left as None are drawn uniformly on [0, pi].
    """
    numClusters: int
    numRays: int
    numTaps: int
    angleSpreadStd: float = DEFAULT_ANGLE_SPREAD_STD
    samplingRateHz: float = DEFAULT_SAMPLING_RATE_HZ
    rolloff: float = DEFAULT_ROLLOFF
    clusterMeanAoa: tuple[float, ...] | None = None
    clusterMeanAod: tuple[float, ...] | None = None
    normalizePulseEnergy: bool = True

    def __post_init__(self):
        if self.numClusters < 1 or self.numRays < 1:
            raise InvalidArgumentError(
                f"Need at least one cluster and one ray, got {self.numClusters} x {self.numRays}"
            )
        if self.numTaps < 1:
            raise InvalidArgumentError(f"Delay span must cover at least one tap, got {self.numTaps}")
        if self.samplingRateHz <= 0:
            raise InvalidArgumentError(f"Sampling rate must be positive, got {self.samplingRateHz}")
        if not 0.0 <= self.rolloff <= 1.0:
            raise InvalidArgumentError(f"Rolloff must lie in [0, 1], got {self.rolloff}")
        if self.angleSpreadStd < 0:
            raise InvalidArgumentError(f"Angle spread must be >= 0, got {self.angleSpreadStd}")
        for name in ("clusterMeanAoa", "clusterMeanAod"):
            means = getattr(self, name)
            if means is None:
                continue
            if len(means) != self.numClusters:
                raise InvalidArgumentError(
                    f"{name} has {len(means)} entries for {self.numClusters} cluster(s)"
                )
            if any(not 0.0 <= a <= math.pi for a in means):
                raise InvalidArgumentError(f"{name} entries must lie in [0, pi], got {means}")

    @property
    def symbolPeriod(self) -> float:
        return 1.0 / self.samplingRateHz


@dataclass(frozen=True, eq=False)
class RayParams:
    """Per-ray angles (radians), complex gains and delays (seconds), flattened over clusters."""
    aoa: np.ndarray
    aod: np.ndarray
    gains: np.ndarray
    delays: np.ndarray
    numClusters: int

    @property
    def numRays(self) -> int:
        """Total ray count across all clusters."""
        return len(self.gains)


@dataclass(frozen=True, eq=False)
class ChannelTaps:
    """Time-domain MIMO impulse response, shaped (D, Nr, Nt)."""
    taps: np.ndarray

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=complex)
        if taps.ndim != 3 or taps.shape[0] < 1:
            raise InvalidArgumentError(f"Taps must be shaped (D>=1, Nr, Nt), got {taps.shape}")
        object.__setattr__(self, "taps", taps)

    @property
    def numTaps(self) -> int:
        return self.taps.shape[0]

    @property
    def nr(self) -> int:
        return self.taps.shape[1]

    @property
    def nt(self) -> int:
        return self.taps.shape[2]

    def energy(self) -> float:
        """Sum over taps of the squared Frobenius norm."""
        return float(np.sum(np.abs(self.taps) ** 2))


@dataclass(frozen=True, eq=False)
class SubcarrierChannels:
    """Per-subcarrier frequency response, shaped (U, Nr, Nt)."""
    subchannels: np.ndarray

    def __post_init__(self):
        subchannels = np.asarray(self.subchannels, dtype=complex)
        if subchannels.ndim != 3 or subchannels.shape[0] < 1:
            raise InvalidArgumentError(
                f"Subchannels must be shaped (U>=1, Nr, Nt), got {subchannels.shape}"
            )
        object.__setattr__(self, "subchannels", subchannels)

    @property
    def numSubcarriers(self) -> int:
        return self.subchannels.shape[0]

    @property
    def nr(self) -> int:
        return self.subchannels.shape[1]

    @property
    def nt(self) -> int:
        return self.subchannels.shape[2]

    @classmethod
    def zeros(cls, numSubcarriers: int, nr: int, nt: int) -> SubcarrierChannels:
        return cls(np.zeros((numSubcarriers, nr, nt), dtype=complex))


@dataclass(frozen=True)
class SiChannelParams:
    """Self-interference channel: Rician mix of a spherical-wave LOS and clustered NLOS."""
    ricianKappa: float
    nlosParams: ClusterParams
    geometryTx: ArrayGeometry = field(compare=False)
    geometryRx: ArrayGeometry = field(compare=False)

    def __post_init__(self):
        if not math.isfinite(self.ricianKappa) or self.ricianKappa < 0:
            raise InvalidArgumentError(
                f"Rician factor must be finite and >= 0, got {self.ricianKappa}"
            )


# ============================================================
# PUBLIC API
# ============================================================

def ulaResponse(numElements: int, angle: float) -> np.ndarray:
    """Unit-norm ULA response exp(i*pi*n*cos(angle)) / sqrt(N), angle from the array axis."""
    if numElements < 1:
        raise InvalidArgumentError(f"ULA needs at least one element, got {numElements}")
    if not math.isfinite(angle):
        raise InvalidArgumentError(f"Steering angle must be finite, got {angle}")
    return _steeringMatrix(numElements, np.array([angle]))[:, 0]


def _steeringMatrix(numElements: int, angles: np.ndarray) -> np.ndarray:
    """Columns are ULA responses for each angle, shaped (numElements, len(angles))."""
    n = np.arange(numElements)[:, None]
    return np.exp(1j * np.pi * n * np.cos(angles)[None, :]) / math.sqrt(numElements)


def rrcPulse(t, rolloff: float, symbolPeriod: float):
    """
    Root-raised-cosine impulse response, peak-normalized so p(0) = 1 + rolloff*(4/pi - 1).

    Accepts a scalar or an array of times (seconds); returns the same shape.
    """
    if not 0.0 <= rolloff <= 1.0:
        raise InvalidArgumentError(f"Rolloff must lie in [0, 1], got {rolloff}")
    if symbolPeriod <= 0:
        raise InvalidArgumentError(f"Symbol period must be positive, got {symbolPeriod}")

    scalar = np.ndim(t) == 0
    x = np.atleast_1d(np.asarray(t, dtype=float)) / symbolPeriod
    out = np.empty_like(x)
    beta = rolloff

    atZero = np.abs(x) < _SINGULARITY_TOL
    if beta > 0:
        atEdge = np.abs(np.abs(x) - 1.0 / (4.0 * beta)) < _SINGULARITY_TOL
    else:
        atEdge = np.zeros_like(atZero)
    regular = ~(atZero | atEdge)

    out[atZero] = 1.0 + beta * (4.0 / np.pi - 1.0)
    if np.any(atEdge):
        quarter = np.pi / (4.0 * beta)
        out[atEdge] = (beta / math.sqrt(2.0)) * (
            (1.0 + 2.0 / np.pi) * math.sin(quarter) + (1.0 - 2.0 / np.pi) * math.cos(quarter)
        )
    xr = x[regular]
    out[regular] = (
        np.sin(np.pi * xr * (1.0 - beta)) + 4.0 * beta * xr * np.cos(np.pi * xr * (1.0 + beta))
    ) / (np.pi * xr * (1.0 - (4.0 * beta * xr) ** 2))

    if scalar:
        return float(out[0])
    return out


@lru_cache(maxsize=32)
def pulseEnergyGain(numTaps: int, rolloff: float) -> float:
    """
    Expected sum over taps d = 0..D-1 of p(d*Ts - tau)^2 for tau ~ U[0, D*Ts).

    Equals (1/D) * sum_d integral_{d-D}^{d} p(s)^2 ds in symbol-period units. The pulse
    is even, so every term splits into integrals from 0 over unit segments.
    """
    if numTaps < 1:
        raise InvalidArgumentError(f"numTaps must be >= 1, got {numTaps}")

    def energyDensity(s: float) -> float:
        return rrcPulse(s, rolloff, 1.0) ** 2

    segments = np.array(
        [integrate.quad(energyDensity, m, m + 1, limit=200)[0] for m in range(numTaps)]
    )
    cumulative = np.concatenate(([0.0], np.cumsum(segments)))   # cumulative[n] = integral_0^n
    total = 2.0 * np.sum(cumulative[1:numTaps]) + cumulative[numTaps]
    gain = float(total / numTaps)
    logger.debug(f"Pulse energy gain for D={numTaps}, rolloff={rolloff}: {gain:.6f}")
    return gain


def drawRays(params: ClusterParams, rng: np.random.Generator) -> RayParams:
    """Draw per-ray angles, gains and delays for one clustered realization."""
    nc, nr = params.numClusters, params.numRays
    meanAoa = (
        np.asarray(params.clusterMeanAoa, dtype=float)
        if params.clusterMeanAoa is not None
        else rng.uniform(0.0, np.pi, nc)
    )
    meanAod = (
        np.asarray(params.clusterMeanAod, dtype=float)
        if params.clusterMeanAod is not None
        else rng.uniform(0.0, np.pi, nc)
    )
    # Laplacian with standard deviation s has scale s / sqrt(2)
    scale = params.angleSpreadStd / math.sqrt(2.0)
    aoa = rng.laplace(np.repeat(meanAoa, nr), scale)
    aod = rng.laplace(np.repeat(meanAod, nr), scale)
    gains = (rng.standard_normal(nc * nr) + 1j * rng.standard_normal(nc * nr)) / math.sqrt(2.0)
    delays = rng.uniform(0.0, params.numTaps * params.symbolPeriod, nc * nr)
    return RayParams(aoa=aoa, aod=aod, gains=gains, delays=delays, numClusters=nc)


def clusteredTapsFromRays(
    rays: RayParams, nr: int, nt: int, params: ClusterParams
) -> ChannelTaps:
    """
    Build taps H[d] = alpha * sum over rays of g * p(d*Ts - tau) * a_r * a_t^H.

    alpha = sqrt(Nt*Nr / (Nclust*Nrays)), further divided by the square root of the
    expected pulse energy when params.normalizePulseEnergy is set.
    """
    if nr < 1 or nt < 1:
        raise InvalidArgumentError(f"Array sizes must be >= 1, got nr={nr}, nt={nt}")
    ts = params.symbolPeriod
    alpha = math.sqrt(nt * nr / rays.numRays)
    if params.normalizePulseEnergy:
        alpha /= math.sqrt(pulseEnergyGain(params.numTaps, params.rolloff))

    d = np.arange(params.numTaps)[:, None]
    pulses = rrcPulse(d * ts - rays.delays[None, :], params.rolloff, ts)    # (D, R)
    ar = _steeringMatrix(nr, rays.aoa)                                      # (Nr, R)
    at = _steeringMatrix(nt, rays.aod)                                      # (Nt, R)
    weighted = pulses * rays.gains[None, :]                                 # (D, R)
    taps = alpha * ((ar[None, :, :] * weighted[:, None, :]) @ at.conj().T)
    return ChannelTaps(taps)


def genClusteredTaps(
    params: ClusterParams, nr: int, nt: int, rng: np.random.Generator
) -> ChannelTaps:
    """Draw one clustered frequency-selective channel realization."""
    rays = drawRays(params, rng)
    return clusteredTapsFromRays(rays, nr, nt, params)


def genSiLos(geometryTx: ArrayGeometry, geometryRx: ArrayGeometry) -> np.ndarray:
    """
    Spherical-wave LOS SI matrix, entry (n, m) = rho * exp(-i*2*pi*r) / r.

    r is the tx-element-m to rx-element-n distance in wavelengths; rho makes the
    squared Frobenius norm equal Nt*Nr.
    """
    diff = geometryRx.elementPositions[:, None, :] - geometryTx.elementPositions[None, :, :]
    r = np.linalg.norm(diff, axis=-1)
    if np.any(r <= 0):
        n, m = np.argwhere(r <= 0)[0]
        raise InvalidGeometryError(f"Tx element {m} and rx element {n} are coincident")
    h = np.exp(-2j * np.pi * r) / r
    rho = math.sqrt(geometryTx.numElements * geometryRx.numElements) / np.linalg.norm(h)
    return rho * h


def genSiTaps(params: SiChannelParams, rng: np.random.Generator) -> ChannelTaps:
    """Rician SI taps: LOS enters tap 0 only, NLOS drawn by genClusteredTaps."""
    kappa = params.ricianKappa
    nr, nt = params.geometryRx.numElements, params.geometryTx.numElements
    nlos = genClusteredTaps(params.nlosParams, nr, nt, rng)
    los = genSiLos(params.geometryTx, params.geometryRx)

    taps = math.sqrt(1.0 / (kappa + 1.0)) * nlos.taps
    taps[0] += math.sqrt(kappa / (kappa + 1.0)) * los
    return ChannelTaps(taps)


def tapsToSubcarriers(taps: ChannelTaps, numSubcarriers: int) -> SubcarrierChannels:
    """U-point DFT of the taps: H[u] = sum_d H[d] exp(-i*2*pi*u*d/U)."""
    if numSubcarriers < taps.numTaps:
        raise InvalidArgumentError(
            f"Cyclic-prefix assumption violated: U={numSubcarriers} subcarriers "
            f"is fewer than D={taps.numTaps} taps"
        )
    if taps.numTaps == 1:
        flat = np.broadcast_to(taps.taps[0], (numSubcarriers, taps.nr, taps.nt))
        return SubcarrierChannels(flat.copy())
    return SubcarrierChannels(np.fft.fft(taps.taps, n=numSubcarriers, axis=0))


def writeChannelCsv(path: str | Path, matrices: np.ndarray, indexName: str = "tap") -> Path:
    """Dump a stack of (K, Nr, Nt) complex matrices as index, rx, tx, real, imag rows."""
    matrices = np.asarray(matrices)
    if matrices.ndim != 3:
        raise InvalidArgumentError(f"Expected a (K, Nr, Nt) stack, got shape {matrices.shape}")
    path = Path(path)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow([f"{indexName}_index", "rx_index", "tx_index", "real", "imag"])
        for (k, n, m), value in np.ndenumerate(matrices):
            writer.writerow([k, n, m, f"{value.real:.17g}", f"{value.imag:.17g}"])
    logger.info(f"Wrote {matrices.shape[0]} {indexName} matrices to {path}")
    return path
