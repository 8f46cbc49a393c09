"""Exception types shared across the package.

Everything numerical that can fail in an expected way gets its own class so
the command line driver can map failures to exit codes without string
matching.
"""


class TorusbandError(Exception):
    """Base class for package errors."""


class ConfigError(TorusbandError):
    """Bad or missing configuration input (maps to exit code 2)."""


class EmptyShell(TorusbandError):
    """The requested annulus contains no lattice points."""


class DimensionCapExceeded(TorusbandError):
    """A matrix dimension went past the configured safety cap."""


class ConvergenceFailure(TorusbandError):
    """An iterative eigenvalue computation did not converge."""


class DegenerateMinimum(TorusbandError):
    """A located minimum has (numerically) vanishing second derivative."""


class TruncationTooSmall(TorusbandError):
    """A frequency truncation is too small for the requested spectral region."""


class RegionViolatesHypotheses(TorusbandError):
    """A resolvent-probe region leaves the regime where the bound is claimed."""
