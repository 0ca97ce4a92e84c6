"""Exception hierarchy shared by all solver modules."""

from __future__ import annotations


class RingError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 3


class DomainError(RingError, ValueError):
    """An argument lies outside the open half-plane or a parameter range."""


class SingularityError(RingError, ValueError):
    """A kernel was evaluated at coincident points."""


class GeometryError(RingError):
    """A patch or disc violates a geometric precondition."""


class TopologyError(RingError):
    """A level set is empty, not star-shaped, or split into pieces."""

    def __init__(self, message: str, theta: float | None = None, state=None):
        super().__init__(message)
        self.theta = theta
        self.state = state


class SolverError(RingError):
    """An iterative solve failed to converge within its budget."""

    def __init__(self, message: str, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class QuadratureError(RingError):
    """A quadrature could not reach its tolerance; carries the estimate."""

    def __init__(self, message: str, estimate: float | None = None):
        super().__init__(message)
        self.estimate = estimate


class ConstraintError(RingError, ValueError):
    """A patch is outside the admissible class of the variational problem."""


class ConfigError(RingError, ValueError):
    """A run configuration could not be parsed or validated."""

    exit_code = 2


class OutputError(RingError, OSError):
    """An output file could not be written or an input file read."""

    exit_code = 4
