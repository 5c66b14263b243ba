import numpy as np
import pytest

from bfc_simulator.bfc import LinkSnrs, NetworkDimensions, NodeCodebooks, NodeDimensions, designFull
from bfc_simulator.channel import SubcarrierChannels
from bfc_simulator.errors import DegenerateCombinerError, InvalidArgumentError
from bfc_simulator.hybrid import HybridBeamformer, dftCodebook
from bfc_simulator.metrics import (
    achievedRates,
    benchmarks,
    rateKi,
    siFreeRate,
    spectralEfficiency,
)
from tests.helpers import crandn


def _dims(na, nrfTxI=4):
    return NetworkDimensions(
        i=NodeDimensions(na, na, nrfTxI, 2, 2),
        j=NodeDimensions(na, na, 2, 2, 2),
        k=NodeDimensions(na, na, 2, 2, 2),
    )


def _oracleRate(h, f, w, snr, g=None, snrG=0.0):
    """Direct log2 det(I + snr W^H H F F^H H^H W (W^H Q W)^-1) without whitening."""
    q = np.eye(h.shape[0])
    if g is not None:
        q = q + snrG * g @ g.conj().T
    a = w.conj().T @ h @ f
    noise = w.conj().T @ q @ w
    m = np.eye(a.shape[0]) + snr * a @ a.conj().T @ np.linalg.inv(noise)
    return float(np.log2(np.abs(np.linalg.det(m))))


# ── spectralEfficiency ────────────────────────────────────────────────────────

class TestSpectralEfficiency:

    def testScalarChannel(self):
        one = np.ones((1, 1), dtype=complex)
        assert spectralEfficiency(one, one, one, 1.0) == pytest.approx(1.0)

    def testZeroSnrGivesZero(self, rng):
        h = crandn(rng, 3, 4, 4)
        rate = spectralEfficiency(h, crandn(rng, 3, 4, 2), crandn(rng, 3, 4, 2), 0.0)
        assert np.allclose(rate, 0.0, atol=1e-12)

    def testParallelModes(self):
        h = np.diag([2.0, 1.0]).astype(complex)
        eye = np.eye(2, dtype=complex)
        assert spectralEfficiency(h, eye, eye, 1.0) == pytest.approx(np.log2(5) + 1)

    def testMatchesCovarianceFormula(self, rng):
        h, g = crandn(rng, 2, 4, 4), crandn(rng, 2, 4, 3)
        f, w = crandn(rng, 2, 4, 1), crandn(rng, 2, 4, 2)
        rate = spectralEfficiency(h, f, w, 5.0, interference=g, snrInterference=2.0)
        for u in range(2):
            assert rate[u] == pytest.approx(_oracleRate(h[u], f[u], w[u], 5.0, g[u], 2.0), rel=1e-9)

    def testZeroInterferenceSnrIgnoresInterference(self, rng):
        h, f, w = crandn(rng, 2, 4, 4), crandn(rng, 2, 4, 2), crandn(rng, 2, 4, 2)
        clean = spectralEfficiency(h, f, w, 10.0)
        assert np.array_equal(
            spectralEfficiency(h, f, w, 10.0, interference=crandn(rng, 2, 4, 2), snrInterference=0.0),
            clean,
        )

    def testOverwhelmingInterferenceKillsRate(self, rng):
        h, f, w = crandn(rng, 2, 4, 4), crandn(rng, 2, 4, 2), crandn(rng, 2, 4, 2)
        rate = spectralEfficiency(
            h, f, w, 10.0, interference=crandn(rng, 2, 4, 4), snrInterference=1e30
        )
        assert np.all(rate < 1e-3)

    def testInvariantToCombinerScaling(self, rng):
        h, f, w = crandn(rng, 2, 4, 4), crandn(rng, 2, 4, 2), crandn(rng, 2, 4, 2)
        assert np.allclose(
            spectralEfficiency(h, f, 2.5j * w, 3.0), spectralEfficiency(h, f, w, 3.0), rtol=1e-10
        )

    def testNonnegativeAndMonotoneInSnr(self, rng):
        h, f, w = crandn(rng, 4, 6, 6), crandn(rng, 4, 6, 2), crandn(rng, 4, 6, 2)
        rates = [spectralEfficiency(h, f, w, snr) for snr in (0.1, 1.0, 10.0, 100.0)]
        assert np.all(rates[0] >= 0)
        for low, high in zip(rates, rates[1:]):
            assert np.all(high >= low)

    def testRankDeficientCombinerRejected(self, rng):
        h, f = crandn(rng, 4, 4), crandn(rng, 4, 2)
        column = crandn(rng, 4, 1)
        with pytest.raises(DegenerateCombinerError):
            spectralEfficiency(h, f, np.hstack([column, 2 * column]), 1.0)
        with pytest.raises(DegenerateCombinerError):
            spectralEfficiency(h, f, np.zeros((4, 2)), 1.0)

    def testNegativeSnrRejected(self, rng):
        with pytest.raises(InvalidArgumentError):
            spectralEfficiency(crandn(rng, 2, 2), crandn(rng, 2, 1), crandn(rng, 2, 1), -1.0)


# ── link rates ────────────────────────────────────────────────────────────────

class TestLinkRates:

    def _beamformers(self, rng):
        precoderK = HybridBeamformer.fullyDigital(crandn(rng, 3, 6, 2))
        combinerI = HybridBeamformer.fullyDigital(crandn(rng, 3, 6, 2))
        precoderI = HybridBeamformer.fullyDigital(crandn(rng, 3, 6, 2))
        return precoderK, combinerI, precoderI

    def testZeroSiSnrMatchesSiFreeRate(self, rng):
        precoderK, combinerI, precoderI = self._beamformers(rng)
        hKi, hIi = crandn(rng, 3, 6, 6), crandn(rng, 3, 6, 6)
        withSi = rateKi(hKi, hIi, precoderK, combinerI, precoderI, 10.0, 0.0)
        clean = siFreeRate(hKi, precoderK, combinerI, 10.0)
        assert np.array_equal(withSi.perSubcarrier, clean.perSubcarrier)
        assert withSi.average == clean.average

    def testSiLowersRate(self, rng):
        precoderK, combinerI, precoderI = self._beamformers(rng)
        hKi, hIi = crandn(rng, 3, 6, 6), crandn(rng, 3, 6, 6)
        withSi = rateKi(hKi, hIi, precoderK, combinerI, precoderI, 10.0, 10.0)
        assert withSi.average < siFreeRate(hKi, precoderK, combinerI, 10.0).average

    def testAverageIsSubcarrierMean(self, rng):
        precoderK, combinerI, _ = self._beamformers(rng)
        rate = siFreeRate(crandn(rng, 3, 6, 6), precoderK, combinerI, 10.0)
        assert rate.average == pytest.approx(float(np.mean(rate.perSubcarrier)))


# ── achievedRates / benchmarks ────────────────────────────────────────────────

class TestBenchmarks:

    def _channels(self, rng, na=8, u=4):
        return SubcarrierChannels(crandn(rng, u, na, na)), SubcarrierChannels(crandn(rng, u, na, na))

    def testHalfDuplexIsExactlyHalf(self, rng):
        hKi, hIj = self._channels(rng)
        report = benchmarks(hKi, hIj, _dims(8), LinkSnrs(10.0, 10.0, 0.0), NodeCodebooks.dft(8))
        assert report.hdDigital * 2 == report.idealFdDigital
        assert report.hdHybrid * 2 == report.idealFdHybrid

    def testZeroSnrGivesZeroBenchmarks(self, rng):
        hKi, hIj = self._channels(rng)
        report = benchmarks(hKi, hIj, _dims(8), LinkSnrs(0.0, 0.0, 0.0), NodeCodebooks.dft(8))
        assert report.idealFdDigital == pytest.approx(0.0, abs=1e-12)
        assert report.idealFdHybrid == pytest.approx(0.0, abs=1e-12)

    def testDigitalBeatsHybridOnTypicalChannels(self, rng):
        gaps = []
        for _ in range(50):
            hKi, hIj = self._channels(rng, na=16, u=2)
            report = benchmarks(hKi, hIj, _dims(16), LinkSnrs(10.0, 10.0, 0.0), NodeCodebooks.dft(16))
            gaps.append(report.idealFdDigital - report.idealFdHybrid)
        assert np.median(gaps) >= 0

    def testCodebookRepresentableChannelLosesNothing(self):
        a = dftCodebook(8).matrix
        single = a[:, [0, 3]] @ np.diag([2.0, 1.0]) @ a[:, [4, 7]].conj().T
        h = SubcarrierChannels(np.stack([single] * 3))
        report = benchmarks(h, h, _dims(8, nrfTxI=2), LinkSnrs(10.0, 10.0, 0.0), NodeCodebooks.dft(8))
        assert report.idealFdHybrid == pytest.approx(report.idealFdDigital, rel=1e-8)

    def testCpFactorScalesEverything(self, rng):
        hKi, hIj = self._channels(rng)
        args = (hKi, hIj, _dims(8), LinkSnrs(10.0, 10.0, 0.0), NodeCodebooks.dft(8))
        full, scaled = benchmarks(*args), benchmarks(*args, cpFactor=0.8)
        assert scaled.idealFdDigital == pytest.approx(0.8 * full.idealFdDigital, rel=1e-12)
        assert scaled.idealFdHybrid == pytest.approx(0.8 * full.idealFdHybrid, rel=1e-12)

    def testAchievedRatesWithoutSiMatchHybridBenchmarkOnKiLink(self, rng):
        hKi, hIj = self._channels(rng)
        dims, codebooks = _dims(8), NodeCodebooks.dft(8)
        snrs = LinkSnrs(10.0, 10.0, 0.0)
        hIi = SubcarrierChannels.zeros(4, 8, 8)
        design = designFull(hKi, hIj, hIi, dims, snrs, codebooks)
        report = achievedRates(hKi, hIj, hIi, design, snrs)
        kiOnly = siFreeRate(hKi.subchannels, design.precoderK, design.combinerI, 10.0)
        assert report.rateKi == pytest.approx(kiOnly.average, rel=1e-12)
        assert report.sumFd == report.rateIj + report.rateKi
        assert report.perSubcarrierIj.shape == (4,)
