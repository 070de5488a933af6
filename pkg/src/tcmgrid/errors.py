"""Exception taxonomy shared by all tcmgrid modules.

Every error raised by the library derives from :class:`SimulationError`,
so callers (and the CLI) can map failure classes to distinct exit codes.
"""

from __future__ import annotations


class SimulationError(Exception):
    """Base class for all tcmgrid errors."""


class ParameterError(SimulationError):
    """A value violates a documented precondition (bad n, dt <= 0, ...)."""


class DimensionError(SimulationError):
    """Matrix shape problems: non-square input, size mismatch, cap exceeded."""


class PartitionError(SimulationError):
    """Block-grid problems: grid side does not divide the matrix dimension,
    mismatched grids, or a missing block at gather time."""


class WorkerPoolError(SimulationError):
    """The requested worker grid cannot be provided (e.g. the configured
    worker cap is below q*q, or the engine was already shut down)."""


class CannonWorkerError(SimulationError):
    """A worker failed mid-multiply; the whole operation is abandoned and
    no partial result is returned."""


class EigenDecompositionError(SimulationError):
    """The Hermitian eigendecomposition backing the exact exponential did
    not converge. Never silently approximated."""


class TraceDivergenceError(SimulationError):
    """The density-matrix trace left the configured accuracy band during a
    trajectory, indicating the step size is too large for the truncation
    order; the trajectory is aborted rather than silently continued."""
