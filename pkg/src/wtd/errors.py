"""Exception types shared by the simulation, IET and analysis layers."""

from __future__ import annotations


class WtdError(Exception):
    """Base class for all errors raised by this package."""


class OutOfDomain(WtdError, ValueError):
    """Obstacle parameters outside the open unit square."""


class SingularTrajectory(WtdError):
    """A billiard ray hit an obstacle corner (within tolerance)."""

    def __init__(self, message: str, event=None):
        super().__init__(message)
        self.event = event


class NumericalDegeneracy(WtdError):
    """An event time fell below the minimum resolvable step."""


class Timeout(WtdError):
    """The event budget of a run was exhausted before ``t_max``."""


class InsufficientData(WtdError):
    """Not enough samples or completed runs to produce an estimate."""


class Reducible(WtdError, ValueError):
    """The pair of orders defining an IET is reducible."""


class NonPositiveLength(WtdError, ValueError):
    pass


class OutOfRange(WtdError, ValueError):
    pass


class SingularPoint(WtdError):
    """The point is a cut point of the top decomposition."""

    def __init__(self, x):
        super().__init__(f"{x!r} is a cut point")
        self.x = x


class SingularAt(WtdError):
    """An orbit reached a singularity after ``step`` iterates.

    ``word`` holds the coding letters collected before the singular step.
    """

    def __init__(self, step: int, word=()):
        super().__init__(f"orbit hits a singularity at step {step}")
        self.step = step
        self.word = tuple(word)


class ConnectionEncountered(WtdError):
    """Rauzy induction met a tie between the last top and bottom lengths."""


class Degenerate(WtdError):
    """The cocycle vanishes under the renormalization products."""


class GridMismatch(WtdError, ValueError):
    pass


class ConfigError(WtdError, ValueError):
    pass
