"""Wind-tree billiards, interval exchange transformations and their diffusion exponents."""

from importlib import metadata as _metadata

try:
    __version__ = _metadata.version("artifact")
except _metadata.PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .errors import (ConfigError, ConnectionEncountered, Degenerate, GridMismatch,
                     InsufficientData, NonPositiveLength, NumericalDegeneracy, OutOfDomain,
                     OutOfRange, Reducible, SingularAt, SingularPoint, SingularTrajectory,
                     Timeout, WtdError)
from .qfield import Quad

__all__ = [
    "ConfigError", "ConnectionEncountered", "Degenerate", "GridMismatch", "InsufficientData",
    "NonPositiveLength", "NumericalDegeneracy", "OutOfDomain", "OutOfRange", "Quad",
    "Reducible", "SingularAt", "SingularPoint", "SingularTrajectory", "Timeout", "WtdError",
    "__version__",
]
