# Hybrid beamforming for the full-duplex beamforming-cancellation simulator:
# DFT codebooks, OMP hybrid approximation and its frequency-selective stacked form

from __future__ import annotations

import csv
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import scipy.linalg

from bfc_simulator.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

# Singular values below this fraction of the largest are treated as zero
PINV_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class Codebook:
    """Candidate RF beamformers: constant-amplitude, phase-quantized columns."""
    matrix: np.ndarray          # (Na, M)
    phaseResolution: float      # radians

    @property
    def numAntennas(self) -> int:
        return self.matrix.shape[0]

    @property
    def size(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True, eq=False)
class HybridBeamformer:
    """
    One frequency-flat RF matrix (Na, Nrf) and per-subcarrier baseband matrices (U, Nrf, Ns).

    `approximationError` is the relative Frobenius error of the hybrid factorization
    against its fully-digital target, when it came from FS-OMP.
    """
    rf: np.ndarray
    bb: np.ndarray
    approximationError: float = 0.0

    def __post_init__(self):
        if self.rf.ndim != 2 or self.bb.ndim != 3:
            raise InvalidArgumentError(
                f"Expected rf (Na, Nrf) and bb (U, Nrf, Ns), got {self.rf.shape} and {self.bb.shape}"
            )
        if self.bb.shape[1] != self.rf.shape[1]:
            raise InvalidArgumentError(
                f"Baseband has {self.bb.shape[1]} rows for {self.rf.shape[1]} RF chains"
            )

    @classmethod
    def fullyDigital(cls, perSubcarrier: np.ndarray) -> HybridBeamformer:
        """Wrap (U, Na, Ns) digital beamformers behind an identity RF stage."""
        perSubcarrier = np.asarray(perSubcarrier, dtype=complex)
        na = perSubcarrier.shape[1]
        return cls(np.eye(na, dtype=complex), perSubcarrier.copy())

    @property
    def numAntennas(self) -> int:
        return self.rf.shape[0]

    @property
    def nrf(self) -> int:
        return self.rf.shape[1]

    @property
    def ns(self) -> int:
        return self.bb.shape[2]

    @property
    def numSubcarriers(self) -> int:
        return self.bb.shape[0]

    @property
    def effective(self) -> np.ndarray:
        """rf @ bb[u] for every subcarrier, shaped (U, Na, Ns)."""
        return self.rf @ self.bb

    def withBaseband(self, bb: np.ndarray) -> HybridBeamformer:
        return replace(self, bb=bb)


# ============================================================
# PUBLIC API
# ============================================================

def dftCodebook(n: int) -> Codebook:
    """n-point DFT codebook, entry (m, k) = exp(i*2*pi*m*k/n) / sqrt(n)."""
    if n < 1:
        raise InvalidArgumentError(f"Codebook size must be >= 1, got {n}")
    idx = np.arange(n)
    # reduce m*k mod n first so large phases keep full precision
    phaseIndex = np.outer(idx, idx) % n
    matrix = np.exp(2j * np.pi * phaseIndex / n) / math.sqrt(n)
    return Codebook(matrix=matrix, phaseResolution=2.0 * np.pi / n)


def ompHybridApprox(
    target: np.ndarray, codebook: Codebook, nrf: int
) -> tuple[np.ndarray, np.ndarray]:
    """
    Greedy OMP factorization target ~= rf @ bb with rf columns taken from the codebook.

    Each iteration picks the unused codebook column with the largest summed squared
    correlation against the normalized residual (lowest index on ties), then refits
    bb by least squares.
    """
    target = np.asarray(target, dtype=complex)
    if target.ndim != 2 or target.shape[0] != codebook.numAntennas:
        raise InvalidArgumentError(
            f"Target of shape {target.shape} does not match a {codebook.numAntennas}-antenna codebook"
        )
    if not 1 <= nrf <= codebook.size:
        raise InvalidArgumentError(
            f"nrf={nrf} must lie in [1, {codebook.size}] for this codebook"
        )

    candidates = codebook.matrix
    selected: list[int] = []
    residual = target
    rf = candidates[:, :0]
    bb = np.zeros((0, target.shape[1]), dtype=complex)
    for _ in range(nrf):
        correlation = np.sum(np.abs(candidates.conj().T @ residual) ** 2, axis=1)
        correlation[selected] = -np.inf
        selected.append(int(np.argmax(correlation)))

        rf = candidates[:, selected]
        bb = scipy.linalg.pinv(rf, atol=0.0, rtol=PINV_RTOL) @ target
        residual = target - rf @ bb
        norm = np.linalg.norm(residual)
        if norm > 0:
            residual = residual / norm

    logger.debug(f"OMP selected codebook columns {selected}")
    return rf, bb


def fsStack(perSubcarrier: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    """Horizontally stack U (Na, Ns) matrices into one (Na, U*Ns) matrix."""
    if len(perSubcarrier) == 0:
        raise InvalidArgumentError("Nothing to stack")
    shapes = {np.shape(m) for m in perSubcarrier}
    if len(shapes) != 1 or len(next(iter(shapes))) != 2:
        raise InvalidArgumentError(f"Per-subcarrier matrices must share one 2-D shape, got {shapes}")
    return np.hstack(list(perSubcarrier))


def fsUnstack(stacked: np.ndarray, numSubcarriers: int) -> np.ndarray:
    """Split an (N, U*Ns) matrix back into (U, N, Ns) blocks in subcarrier order."""
    if numSubcarriers < 1 or stacked.shape[1] % numSubcarriers:
        raise InvalidArgumentError(
            f"Cannot split {stacked.shape[1]} columns into {numSubcarriers} equal blocks"
        )
    return np.stack(np.hsplit(stacked, numSubcarriers))


def fsOmp(
    perSubcarrier: Sequence[np.ndarray] | np.ndarray, codebook: Codebook, nrf: int
) -> HybridBeamformer:
    """Frequency-selective OMP: one RF matrix shared by all subcarriers of the stacked targets."""
    stacked = fsStack(perSubcarrier)
    rf, bbStacked = ompHybridApprox(stacked, codebook, nrf)
    targetNorm = np.linalg.norm(stacked)
    error = np.linalg.norm(stacked - rf @ bbStacked)
    relativeError = float(error / targetNorm) if targetNorm > 0 else 0.0
    return HybridBeamformer(
        rf=rf,
        bb=fsUnstack(bbStacked, len(perSubcarrier)),
        approximationError=relativeError,
    )


def writeCodebookCsv(path: str | Path, codebook: Codebook) -> Path:
    """Dump codebook entries as row, col, real, imag."""
    path = Path(path)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["row", "col", "real", "imag"])
        for (row, col), value in np.ndenumerate(codebook.matrix):
            writer.writerow([row, col, f"{value.real:.17g}", f"{value.imag:.17g}"])
    logger.info(f"Wrote {codebook.numAntennas}x{codebook.size} codebook to {path}")
    return path
