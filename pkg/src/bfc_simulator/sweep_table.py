"""
Sweep Table
Collects per-trial results of a Monte Carlo sweep, aggregates them per SNR
point and writes the plot-ready CSV files.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import astuple, dataclass, fields, replace
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from bfc_simulator.sim import TrialResult

logger = logging.getLogger(__name__)

VALID_STATS = ("median", "mean", "q25", "q75")
SIGNIFICANT_DIGITS = 9
NUMBER_FORMAT = f".{SIGNIFICANT_DIGITS}g"

RATE_COLUMNS = (
    "rate_ij", "rate_ki", "sum_fd", "ideal_fd_digital", "ideal_fd_hybrid", "hd_digital", "hd_hybrid",
)
TRIAL_COLUMNS = ("scenario", "snr_ij_db", "snr_ki_db", "trial", *RATE_COLUMNS)
AGGREGATE_COLUMNS = ("scenario", "snr_ij_db", "snr_ki_db", "stat", *RATE_COLUMNS)
DIAGNOSTICS_COLUMNS = (
    "scenario", "snr_ij_db", "snr_ki_db", "trial", "si_leakage_db",
    "omp_error_precoder_k", "omp_error_combiner_j", "omp_error_combiner_i", "omp_error_precoder_i",
)


def formatNumber(value: float) -> str:
    return f"{value:{NUMBER_FORMAT}}"


def quantizeEven(value: float, digits: int = SIGNIFICANT_DIGITS) -> float:
    """
    Nearest value with `digits` significant digits whose last digit is even.

    Halving such a value needs no more digits, so value and value / 2 print exactly
    at the same precision.
    """
    if value == 0 or not math.isfinite(value):
        return value
    mantissa, exponent = f"{value:.{digits - 1}e}".split("e")
    scale = int(exponent) - (digits - 1)
    m = int(mantissa.replace(".", "").replace("-", ""))
    if m % 2:
        m += 1 if abs(value) > m * 10.0**scale else -1
    return math.copysign(float(f"{m}e{scale}"), value)


def _emittedValues(values: RateValues) -> RateValues:
    """Ideal benchmarks at output precision; half-duplex benchmarks as their exact halves."""
    idealDigital = quantizeEven(values.idealFdDigital)
    idealHybrid = quantizeEven(values.idealFdHybrid)
    return replace(
        values,
        idealFdDigital=idealDigital,
        idealFdHybrid=idealHybrid,
        hdDigital=idealDigital / 2.0,
        hdHybrid=idealHybrid / 2.0,
    )


# ============================================================
# Row Data Structures
# ============================================================

@dataclass(frozen=True)
class RateValues:
    """The seven rate columns of one row, in output order."""
    rateIj: float
    rateKi: float
    sumFd: float
    idealFdDigital: float
    idealFdHybrid: float
    hdDigital: float
    hdHybrid: float


@dataclass(frozen=True)
class TrialRow:
    """One emitted trial line."""
    scenario: str
    snrIndex: int
    snrIjDb: float
    snrKiDb: float
    trial: int
    values: RateValues


@dataclass(frozen=True)
class AggregateRow:
    """Statistics of all trials at one SNR point."""
    scenario: str
    snrIjDb: float
    snrKiDb: float
    numTrials: int
    median: RateValues
    mean: RateValues
    q25: RateValues
    q75: RateValues

    def stat(self, name: str) -> RateValues:
        if name not in VALID_STATS:
            raise ValueError(f"Invalid stat '{name}'. Must be one of: {list(VALID_STATS)}")
        return getattr(self, name)


@dataclass(frozen=True)
class DiagnosticsRow:
    """Design diagnostics of one trial."""
    scenario: str
    snrIjDb: float
    snrKiDb: float
    trial: int
    siLeakageDb: float
    ompErrorPrecoderK: float
    ompErrorCombinerJ: float
    ompErrorCombinerI: float
    ompErrorPrecoderI: float


# ============================================================
# Sweep Table
# ============================================================

class SweepTable:
    """
    Owns the rows of one sweep, in the order results were added.
    """

    def __init__(self, scenario: str):
        self.scenario = scenario
        self._rows: list[TrialRow] = []
        self._diagnostics: list[DiagnosticsRow] = []

    def __len__(self) -> int:
        return len(self._rows)

    # --------------------------------------------------------

    def addResult(self, result: TrialResult) -> None:
        """Append one trial result as a trial row and a diagnostics row."""
        point = result.snrPoint
        self._rows.append(TrialRow(
            scenario=self.scenario,
            snrIndex=point.index,
            snrIjDb=point.snrIjDb,
            snrKiDb=point.snrKiDb,
            trial=result.trialIndex,
            values=RateValues(*result.values()),
        ))

        diag = result.diagnostics
        meanLeakage = diag.meanSiLeakage
        if meanLeakage > 0:
            leakageDb = 10.0 * math.log10(meanLeakage)
        elif meanLeakage == 0:
            leakageDb = -math.inf
        else:
            leakageDb = math.nan
        self._diagnostics.append(DiagnosticsRow(
            scenario=self.scenario,
            snrIjDb=point.snrIjDb,
            snrKiDb=point.snrKiDb,
            trial=result.trialIndex,
            siLeakageDb=leakageDb,
            ompErrorPrecoderK=diag.ompErrorPrecoderK,
            ompErrorCombinerJ=diag.ompErrorCombinerJ,
            ompErrorCombinerI=diag.ompErrorCombinerI,
            ompErrorPrecoderI=diag.ompErrorPrecoderI,
        ))

    # --------------------------------------------------------

    @property
    def rows(self) -> list[TrialRow]:
        return list(self._rows)

    @property
    def diagnostics(self) -> list[DiagnosticsRow]:
        return list(self._diagnostics)

    # --------------------------------------------------------

    def aggregate(self) -> list[AggregateRow]:
        """One row per SNR point, in first-seen order."""
        groups: dict[int, list[TrialRow]] = {}
        for row in self._rows:
            groups.setdefault(row.snrIndex, []).append(row)

        aggregates = []
        for rows in groups.values():
            data = np.array([astuple(r.values) for r in rows])     # (trials, 7)
            aggregates.append(AggregateRow(
                scenario=self.scenario,
                snrIjDb=rows[0].snrIjDb,
                snrKiDb=rows[0].snrKiDb,
                numTrials=len(rows),
                median=RateValues(*np.median(data, axis=0).tolist()),
                mean=RateValues(*np.mean(data, axis=0).tolist()),
                q25=RateValues(*np.percentile(data, 25, axis=0).tolist()),
                q75=RateValues(*np.percentile(data, 75, axis=0).tolist()),
            ))
        return aggregates

    # --------------------------------------------------------

    def writeTrialsCsv(self, path: str | Path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(TRIAL_COLUMNS)
            for row in self._rows:
                writer.writerow([
                    row.scenario,
                    formatNumber(row.snrIjDb),
                    formatNumber(row.snrKiDb),
                    row.trial,
                    *(formatNumber(v) for v in astuple(_emittedValues(row.values))),
                ])
        logger.info(f"Wrote {len(self._rows)} trial row(s) to {path}")
        return path

    def writeAggregateCsv(self, path: str | Path) -> Path:
        path = Path(path)
        aggregates = self.aggregate()
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(AGGREGATE_COLUMNS)
            for agg in aggregates:
                for stat in VALID_STATS:
                    writer.writerow([
                        agg.scenario,
                        formatNumber(agg.snrIjDb),
                        formatNumber(agg.snrKiDb),
                        stat,
                        *(formatNumber(v) for v in astuple(_emittedValues(agg.stat(stat)))),
                    ])
        logger.info(f"Wrote aggregates for {len(aggregates)} SNR point(s) to {path}")
        return path

    def writeDiagnosticsCsv(self, path: str | Path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(DIAGNOSTICS_COLUMNS)
            for row in self._diagnostics:
                writer.writerow([
                    value if isinstance(value, (str, int)) else formatNumber(value)
                    for value in (getattr(row, fld.name) for fld in fields(row))
                ])
        logger.info(f"Wrote {len(self._diagnostics)} diagnostics row(s) to {path}")
        return path
