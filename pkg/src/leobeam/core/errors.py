"""
Exception hierarchy for the simulator.

Library code raises these; only the command line layer turns them into exit codes.
"""

from __future__ import annotations


class LeoBeamError(Exception):
    """Base class for all simulator errors."""


class ScenarioError(LeoBeamError, ValueError):
    """Invalid scenario file, key, value or override."""


class InfeasibleScenarioError(LeoBeamError):
    """A beam cell has no visible satellite to be served from."""

    def __init__(self, message: str, epoch: int | None = None, cell: int | None = None):
        super().__init__(message)
        self.epoch: int | None = epoch
        self.cell: int | None = cell


class GeometryDomainError(LeoBeamError, ValueError):
    """Distances do not form a triangle within tolerance."""


class OracleSizeError(LeoBeamError, ValueError):
    """A brute-force instance is too large to enumerate."""


class TraceError(LeoBeamError):
    """A decisions trace record could not be parsed."""


class EmptyWindowError(LeoBeamError, ValueError):
    """A metrics summary was requested over no frames."""
