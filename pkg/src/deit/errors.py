class DeitError(Exception):
    """Base class for errors raised by this package."""


class ConfigurationError(DeitError):
    """Missing or inconsistent configuration (unknown species, missing C6, ...)."""


class SelectionRuleError(DeitError, ValueError):
    """A dipole matrix element was requested for a forbidden transition."""


class ClosedSectorError(DeitError):
    """Group velocity requested in a sector where J+J- vanishes.

    The next photon sees a two-level medium; use the TLA absorption branch.
    """


class ResolutionError(DeitError):
    """Grid too coarse for the requested computation."""


class MeasurementError(DeitError):
    """A derived observable could not be extracted (e.g. output fully absorbed)."""


class ScenarioError(DeitError):
    """Scenario file could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
