# Exception hierarchy for the full-duplex beamforming-cancellation simulator

from __future__ import annotations


class SimulatorError(Exception):
    """Base class for every error raised by bfc_simulator."""


class InvalidArgumentError(SimulatorError, ValueError):
    """An operation was called with a value outside its domain."""


class InvalidGeometryError(InvalidArgumentError):
    """Array geometry with coincident or non-finite element positions."""


class NumericalFailureError(SimulatorError, ArithmeticError):
    """A linear-algebra step could not produce a usable result."""


class DegeneratePrecoderError(NumericalFailureError):
    """A precoder column has zero norm and cannot be power-normalized."""


class DegenerateCombinerError(NumericalFailureError):
    """A combiner is rank-deficient, so W*QW is singular."""


class ConfigError(SimulatorError, ValueError):
    """
    Scenario configuration could not be parsed or violates an invariant.

    `source` is the file (or bundled scenario name) and `field` the dotted key
    that failed, when known.
    """

    def __init__(self, message: str, source: str | None = None, field: str | None = None):
        prefix = ""
        if source:
            prefix += f"{source}: "
        if field:
            prefix += f"field '{field}': "
        super().__init__(prefix + message)
        self.source = source
        self.field = field


class SimulationFaultError(SimulatorError, RuntimeError):
    """A HIGH-severity sanity check tripped on a trial result."""
