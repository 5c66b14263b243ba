# Beamforming-cancellation design for the three-node full-duplex link:
# eigenbeamformers, FS-OMP hybridization, effective channels and the RZF precoder at node i

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from bfc_simulator.channel import SubcarrierChannels
from bfc_simulator.errors import (
    DegeneratePrecoderError,
    InvalidArgumentError,
    NumericalFailureError,
)
from bfc_simulator.hybrid import Codebook, HybridBeamformer, dftCodebook, fsOmp

logger = logging.getLogger(__name__)

# Singular values below RANK_RTOL * sigma_max count as zero gain
RANK_RTOL = 1e-10
COMPLETION_TIE_RTOL = 1e-6


# ============================================================
# Domain Types
# ============================================================

@dataclass(frozen=True)
class NodeDimensions:
    """Antenna, RF-chain and stream counts of one node."""
    nt: int
    nr: int
    nrfTx: int
    nrfRx: int
    ns: int

    def __post_init__(self):
        if min(self.nt, self.nr, self.nrfTx, self.nrfRx, self.ns) < 1:
            raise InvalidArgumentError(f"All node dimensions must be positive: {self}")
        if self.nrfTx < self.ns or self.nrfRx < self.ns:
            raise InvalidArgumentError(
                f"Need at least ns={self.ns} RF chains per direction, "
                f"got nrfTx={self.nrfTx}, nrfRx={self.nrfRx}"
            )


@dataclass(frozen=True)
class NetworkDimensions:
    """
    Dimensions of FD node i, HD receiver j and HD transmitter k.

    Link i->j carries i.ns streams, link k->i carries k.ns streams.
    """
    i: NodeDimensions
    j: NodeDimensions
    k: NodeDimensions

    def __post_init__(self):
        if self.j.nrfRx < self.i.ns:
            raise InvalidArgumentError(
                f"Node j has {self.j.nrfRx} receive RF chains for {self.i.ns} stream(s) from i"
            )
        if self.i.nrfRx < self.k.ns:
            raise InvalidArgumentError(
                f"Node i has {self.i.nrfRx} receive RF chains for {self.k.ns} stream(s) from k"
            )


@dataclass(frozen=True)
class LinkSnrs:
    """Linear per-link SNRs; snrIi scales the self-interference at node i."""
    snrIj: float
    snrKi: float
    snrIi: float

    def __post_init__(self):
        for name in ("snrIj", "snrKi", "snrIi"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise InvalidArgumentError(f"{name} must be finite and >= 0, got {value}")


@dataclass(frozen=True, eq=False)
class NodeCodebooks:
    """RF codebook used by every array at each node."""
    i: Codebook
    j: Codebook
    k: Codebook

    @classmethod
    def dft(cls, numAntennas: int) -> NodeCodebooks:
        codebook = dftCodebook(numAntennas)
        return cls(i=codebook, j=codebook, k=codebook)


@dataclass(frozen=True, eq=False)
class DesignDiagnostics:
    """Residual SI per subcarrier and the FS-OMP relative errors of the four beamformers."""
    siLeakage: np.ndarray       # (U,) ||H_int F||^2 / ||H_des F||^2 after normalization
    ompErrorPrecoderK: float
    ompErrorCombinerJ: float
    ompErrorCombinerI: float
    ompErrorPrecoderI: float

    @property
    def meanSiLeakage(self) -> float:
        return float(np.mean(self.siLeakage))


@dataclass(frozen=True, eq=False)
class DesignOutput:
    """Beamformers at all three nodes; precoderI carries the RZF baseband."""
    precoderK: HybridBeamformer
    combinerJ: HybridBeamformer
    precoderI: HybridBeamformer
    combinerI: HybridBeamformer
    diagnostics: DesignDiagnostics


# ============================================================
# PUBLIC API
# ============================================================

def _checkStreams(subchannel: np.ndarray, ns: int) -> None:
    nr, nt = subchannel.shape[-2:]
    if not 1 <= ns <= min(nr, nt):
        raise InvalidArgumentError(f"ns={ns} must lie in [1, {min(nr, nt)}] for a {nr}x{nt} channel")


def _completeBasis(vectors: np.ndarray, singularValues: np.ndarray, ns: int) -> np.ndarray:
    """
    First ns singular vectors of one matrix, with directions of (numerically) zero gain
    replaced by a fixed completion.

    The SVD returns an arbitrary basis for the null space, so these directions are rebuilt
    from the standard basis, projected off the significant singular vectors and
    Gram-Schmidt orthonormalized. Candidates are taken largest residual first, lowest index
    among near ties.
    """
    rank = int(np.count_nonzero(singularValues > RANK_RTOL * singularValues[0]))
    if rank >= ns:
        return vectors[:, :ns]
    basis = [vectors[:, m] for m in range(rank)]
    candidates = np.eye(vectors.shape[0], dtype=complex)
    while len(basis) < ns:
        residual = candidates.copy()
        for b in basis:
            residual -= np.outer(b, b.conj() @ residual)
        norms = np.linalg.norm(residual, axis=0)
        best = int(np.flatnonzero(norms >= norms.max() * (1.0 - COMPLETION_TIE_RTOL))[0])
        basis.append(residual[:, best] / norms[best])
    return np.stack(basis, axis=1)


def _singularBasis(vectors: np.ndarray, singularValues: np.ndarray, ns: int) -> np.ndarray:
    if vectors.ndim == 2:
        return _completeBasis(vectors, singularValues, ns)
    return np.stack([_completeBasis(v, s, ns) for v, s in zip(vectors, singularValues)])


def eigenPrecoder(subchannel: np.ndarray, ns: int) -> np.ndarray:
    """First ns right singular vectors; accepts one (Nr, Nt) matrix or a (U, Nr, Nt) stack."""
    subchannel = np.asarray(subchannel, dtype=complex)
    _checkStreams(subchannel, ns)
    _, s, vh = np.linalg.svd(subchannel)
    return _singularBasis(vh.conj().swapaxes(-1, -2), s, ns)


def eigenCombiner(subchannel: np.ndarray, ns: int) -> np.ndarray:
    """First ns left singular vectors; accepts one (Nr, Nt) matrix or a (U, Nr, Nt) stack."""
    subchannel = np.asarray(subchannel, dtype=complex)
    _checkStreams(subchannel, ns)
    u, s, _ = np.linalg.svd(subchannel)
    return _singularBasis(u, s, ns)


def designHdNodes(
    hKi: SubcarrierChannels,
    hIj: SubcarrierChannels,
    dims: NetworkDimensions,
    codebooks: NodeCodebooks,
) -> tuple[HybridBeamformer, HybridBeamformer]:
    """Hybridized eigen precoder at k and eigen combiner at j; fixed from here on."""
    precoderK = fsOmp(eigenPrecoder(hKi.subchannels, dims.k.ns), codebooks.k, dims.k.nrfTx)
    combinerJ = fsOmp(eigenCombiner(hIj.subchannels, dims.i.ns), codebooks.j, dims.j.nrfRx)
    return precoderK, combinerJ


def designFdNodeInitial(
    hKi: SubcarrierChannels,
    hIj: SubcarrierChannels,
    dims: NetworkDimensions,
    codebooks: NodeCodebooks,
) -> tuple[HybridBeamformer, HybridBeamformer]:
    """
    Hybridized eigenbeamformers at node i: combiner for k->i and the initial precoder for i->j.

    The returned precoder holds the fixed RF matrix and the initial baseband matrices
    that the RZF stage replaces.
    """
    combinerI = fsOmp(eigenCombiner(hKi.subchannels, dims.k.ns), codebooks.i, dims.i.nrfRx)
    precoderIInitial = fsOmp(eigenPrecoder(hIj.subchannels, dims.i.ns), codebooks.i, dims.i.nrfTx)
    return combinerI, precoderIInitial


def effectiveChannels(
    combinerI: HybridBeamformer,
    combinerJ: HybridBeamformer,
    precoderIRf: np.ndarray,
    hIi: np.ndarray,
    hIj: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """
    H_int[u] = W_i[u]^H H_ii[u] F_rf and H_des[u] = W_j[u]^H H_ij[u] F_rf.

    Channels are (U, Nr, Nt) stacks; outputs are (U, Ns(k), Nrf) and (U, Ns(i), Nrf).
    """
    hIi = np.asarray(hIi)
    hIj = np.asarray(hIj)
    wI = combinerI.effective
    wJ = combinerJ.effective
    if hIi.shape[-2] != wI.shape[-2] or hIi.shape[-1] != precoderIRf.shape[0]:
        raise InvalidArgumentError(
            f"SI channel {hIi.shape} does not chain with combiner {wI.shape} "
            f"and RF precoder {precoderIRf.shape}"
        )
    if hIj.shape[-2] != wJ.shape[-2] or hIj.shape[-1] != precoderIRf.shape[0]:
        raise InvalidArgumentError(
            f"Desired channel {hIj.shape} does not chain with combiner {wJ.shape} "
            f"and RF precoder {precoderIRf.shape}"
        )
    hInt = wI.conj().swapaxes(-1, -2) @ hIi @ precoderIRf
    hDes = wJ.conj().swapaxes(-1, -2) @ hIj @ precoderIRf
    return hInt, hDes


def regularizedGram(des: np.ndarray, intf: np.ndarray, snrs: LinkSnrs, nrfTxI: int) -> np.ndarray:
    """H_des^H H_des + (snr_ii/snr_ij) H_int^H H_int + (nrf/snr_ij) I for one subcarrier."""
    if snrs.snrIj <= 0:
        raise InvalidArgumentError(f"RZF needs snrIj > 0, got {snrs.snrIj}")
    weight = snrs.snrIi / snrs.snrIj
    gram = des.conj().T @ des + weight * (intf.conj().T @ intf)
    gram += (nrfTxI / snrs.snrIj) * np.eye(nrfTxI)
    # symmetrize away rounding so the Gram is exactly Hermitian
    return 0.5 * (gram + gram.conj().T)


def rzfPrecoder(
    hDes: np.ndarray, hInt: np.ndarray, snrs: LinkSnrs, nrfTxI: int, nsI: int
) -> np.ndarray:
    """
    RZF baseband precoder per subcarrier:
    (H_des^H H_des + (snr_ii/snr_ij) H_int^H H_int + (nrf/snr_ij) I)^-1 H_des^H,
    truncated to the first nsI columns.

    Accepts single matrices or (U, ., Nrf) stacks.
    """
    if snrs.snrIj <= 0:
        raise InvalidArgumentError(f"RZF needs snrIj > 0, got {snrs.snrIj}")
    hDes = np.asarray(hDes, dtype=complex)
    hInt = np.asarray(hInt, dtype=complex)
    single = hDes.ndim == 2
    if single:
        hDes, hInt = hDes[None], hInt[None]
    if hDes.shape[-1] != nrfTxI or hInt.shape[-1] != nrfTxI:
        raise InvalidArgumentError(
            f"Effective channels {hDes.shape}, {hInt.shape} do not have {nrfTxI} RF columns"
        )

    out = np.empty((hDes.shape[0], nrfTxI, hDes.shape[1]), dtype=complex)
    for u, (des, intf) in enumerate(zip(hDes, hInt)):
        desH = des.conj().T
        gram = regularizedGram(des, intf, snrs, nrfTxI)
        try:
            out[u] = scipy.linalg.solve(gram, desH, assume_a="pos")
        except (np.linalg.LinAlgError, ValueError) as e:
            raise NumericalFailureError(f"Regularized Gram on subcarrier {u} is singular: {e}") from e
    out = out[..., :nsI]
    return out[0] if single else out


def normalizePrecoder(rf: np.ndarray, bb: np.ndarray) -> np.ndarray:
    """Rescale each baseband column so every column of rf @ bb[u] has unit norm."""
    norms = np.linalg.norm(rf @ bb, axis=-2)        # (U, Ns)
    if np.any(norms == 0) or not np.all(np.isfinite(norms)):
        u, col = np.argwhere((norms == 0) | ~np.isfinite(norms))[0]
        raise DegeneratePrecoderError(
            f"Precoder column {col} on subcarrier {u} has norm {norms[u, col]}"
        )
    return bb / norms[..., None, :]


def _normalized(beamformer: HybridBeamformer) -> HybridBeamformer:
    return beamformer.withBaseband(normalizePrecoder(beamformer.rf, beamformer.bb))


def designHybridEigen(
    hKi: SubcarrierChannels,
    hIj: SubcarrierChannels,
    dims: NetworkDimensions,
    codebooks: NodeCodebooks,
) -> tuple[HybridBeamformer, HybridBeamformer, HybridBeamformer, HybridBeamformer]:
    """
    Normalized hybrid eigenbeamformers at every node, ignoring SI.

    Returns (precoderK, combinerJ, precoderI, combinerI).
    """
    precoderK, combinerJ = designHdNodes(hKi, hIj, dims, codebooks)
    combinerI, precoderI = designFdNodeInitial(hKi, hIj, dims, codebooks)
    return _normalized(precoderK), combinerJ, _normalized(precoderI), combinerI


def designFull(
    hKi: SubcarrierChannels,
    hIj: SubcarrierChannels,
    hIi: SubcarrierChannels,
    dims: NetworkDimensions,
    snrs: LinkSnrs,
    codebooks: NodeCodebooks,
) -> DesignOutput:
    """Full beamforming-cancellation design across all subcarriers."""
    if dims.i.nrfTx < dims.i.ns + dims.k.ns:
        logger.warning(
            f"Node i has {dims.i.nrfTx} transmit RF chains, fewer than "
            f"Ns(i)+Ns(k)={dims.i.ns + dims.k.ns}; SI cannot be fully nulled"
        )

    precoderK, combinerJ = designHdNodes(hKi, hIj, dims, codebooks)
    combinerI, precoderIInitial = designFdNodeInitial(hKi, hIj, dims, codebooks)
    hInt, hDes = effectiveChannels(
        combinerI, combinerJ, precoderIInitial.rf, hIi.subchannels, hIj.subchannels
    )
    bbRzf = rzfPrecoder(hDes, hInt, snrs, dims.i.nrfTx, dims.i.ns)
    bbFinal = normalizePrecoder(precoderIInitial.rf, bbRzf)
    precoderI = replace(precoderIInitial, bb=bbFinal)

    leakage = np.sum(np.abs(hInt @ bbFinal) ** 2, axis=(-2, -1))
    desired = np.sum(np.abs(hDes @ bbFinal) ** 2, axis=(-2, -1))
    with np.errstate(divide="ignore", invalid="ignore"):
        siLeakage = np.where(desired > 0, leakage / desired, np.nan)

    diagnostics = DesignDiagnostics(
        siLeakage=siLeakage,
        ompErrorPrecoderK=precoderK.approximationError,
        ompErrorCombinerJ=combinerJ.approximationError,
        ompErrorCombinerI=combinerI.approximationError,
        ompErrorPrecoderI=precoderIInitial.approximationError,
    )
    logger.debug(f"Design complete, mean SI leakage {diagnostics.meanSiLeakage:.3e}")
    return DesignOutput(
        precoderK=_normalized(precoderK),
        combinerJ=combinerJ,
        precoderI=precoderI,
        combinerI=combinerI,
        diagnostics=diagnostics,
    )
