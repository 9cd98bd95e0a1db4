"""errors.py - Exception hierarchy for shrinklab.

Every failure the numerical modules can report is a thin subclass of a
builtin exception, so callers that only know ``ValueError`` or
``RuntimeError`` keep working, while the CLI can map the whole family to exit
codes in one place.

Design decisions:
    - Argument and configuration problems are ``InvalidArgument`` (a
      ``ValueError``); the CLI turns them into exit code 2.
    - Numerical failures carry the datum needed to act on them (the vertex,
      the admissible step, the clock, the angle) as attributes, not only in
      the message.
    - An undefined Dirichlet quotient is not an exception: it is ``None``.
"""

from __future__ import annotations


class ShrinklabError(Exception):
    """Root of all shrinklab errors."""


class InvalidArgument(ShrinklabError, ValueError):
    """A precondition on an argument, a config field or an initial spec failed."""


class NumericDegeneracy(ShrinklabError, ArithmeticError):
    """A geometric field could not be computed at a vertex.

    Attributes:
        vertex: Index of the first offending vertex, or ``None`` when the
            failure is not tied to a single vertex.
    """

    def __init__(self, message: str, vertex: int | None = None) -> None:
        super().__init__(message)
        self.vertex = vertex


class StepRejected(ShrinklabError, RuntimeError):
    """The requested time step exceeds the parabolic stability bound.

    Attributes:
        admissible_dt: Largest step the bound allows for the current curve.
    """

    def __init__(self, message: str, admissible_dt: float) -> None:
        super().__init__(message)
        self.admissible_dt = admissible_dt


class BlowUpDetected(ShrinklabError, RuntimeError):
    """The curve stopped being a valid embedded curve during a run.

    Attributes:
        clock: Flow clock at which the failure was detected.
    """

    def __init__(self, message: str, clock: float | None = None) -> None:
        super().__init__(message)
        self.clock = clock


class GraphDecompositionFailed(ShrinklabError, ValueError):
    """The curve is not star-shaped about its centroid.

    Attributes:
        angle: Polar angle (radians) where radial monotonicity first fails.
    """

    def __init__(self, message: str, angle: float) -> None:
        super().__init__(message)
        self.angle = angle


class InsufficientData(ShrinklabError, ValueError):
    """Too few usable samples remain for a fit or series check."""


class FitDegenerate(ShrinklabError, ValueError):
    """The abscissa of a least-squares fit has no spread."""


class CheckFailed(ShrinklabError, RuntimeError):
    """A structural check was violated (not merely outside tolerance)."""


__all__ = [
    "ShrinklabError",
    "InvalidArgument",
    "NumericDegeneracy",
    "StepRejected",
    "BlowUpDetected",
    "GraphDecompositionFailed",
    "InsufficientData",
    "FitDegenerate",
    "CheckFailed",
]
