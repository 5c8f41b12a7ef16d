"""Exception hierarchy shared across the package.

Every error raised on purpose derives from :class:`ThinLevyError`, so callers
(and the CLI) can distinguish "the numerics told you no" from a plain bug.
The optional ``where`` attribute names the computational stage that failed;
the CLI prints it before exiting with a nonzero status.
"""


class ThinLevyError(Exception):
    """Base class for all deliberate failures in this package."""

    def __init__(self, message, *, where=None):
        super().__init__(message)
        self.where = where


class DomainError(ThinLevyError):
    """A parameter is outside the range where the object is defined."""


class ConvergenceError(ThinLevyError):
    """An iterative routine stopped without reaching its tolerance."""


class BracketError(ThinLevyError):
    """A root finder could not bracket a sign change."""


class TruncationError(ThinLevyError):
    """A truncated series cannot certify the requested accuracy."""


class EffectiveSampleError(ThinLevyError):
    """Importance weights are too degenerate to report an estimate."""
