# Sanity checks on Monte Carlo trial results

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from bfc_simulator.errors import SimulationFaultError

logger = logging.getLogger(__name__)


class CheckSeverity(Enum):
    LOW    = 1   # Counted; logged on first trip
    MEDIUM = 2   # Counted; logged as a warning on first trip
    HIGH   = 3   # Aborts the sweep with SimulationFaultError


@dataclass
class Check:
    """A single condition evaluated against every trial result."""
    code: str                                   # Unique identifier (e.g. "NONFINITE_RESULT")
    severity: CheckSeverity
    description: str | Callable[[Any], str]     # Callable form gets the offending result
    condition: Callable[[Any], bool]            # Returns True when the result is suspect
    trips: int = field(default=0, init=False, repr=False)


class SanityMonitor:
    """
    Evaluates registered checks on each trial result.

    HIGH checks raise SimulationFaultError. LOW and MEDIUM checks are counted;
    only their first trip is logged, the rest show up in the summary.
    """

    def __init__(self):
        self._checks: list[Check] = []

    def register(self, check: Check) -> None:
        self._checks.append(check)

    def evaluate(self, result: Any) -> list[Check]:
        """
        Run every check on one result.

        Returns:
            Checks that tripped on this result.
        Raises:
            SimulationFaultError: if a HIGH check tripped.
        """
        tripped: list[Check] = []
        for check in self._checks:
            try:
                failed = bool(check.condition(result))
            except Exception as e:
                logger.error(f"Exception evaluating check [{check.code}]: {e}")
                failed = True   # An unevaluable result is a suspect result

            if not failed:
                continue
            check.trips += 1
            tripped.append(check)
            desc = check.description(result) if callable(check.description) else check.description
            if check.severity == CheckSeverity.HIGH:
                logger.error(f"HIGH CHECK [{check.code}]: {desc}")
                raise SimulationFaultError(f"[{check.code}] {desc}")
            if check.trips == 1:
                if check.severity == CheckSeverity.MEDIUM:
                    logger.warning(f"MEDIUM CHECK [{check.code}]: {desc}")
                else:
                    logger.info(f"LOW CHECK [{check.code}]: {desc}")
        return tripped

    def summary(self) -> dict[str, int]:
        """Trip counts per check code, only for checks that tripped."""
        return {c.code: c.trips for c in self._checks if c.trips}

    def logSummary(self, total: int) -> None:
        counts = self.summary()
        if not counts:
            logger.info(f"All sanity checks passed on {total} trial(s)")
            return
        for code, trips in counts.items():
            logger.warning(f"Check [{code}] tripped on {trips}/{total} trial(s)")
