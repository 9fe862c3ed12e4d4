"""Exception hierarchy shared across the package."""


class LocalOCOError(Exception):
    """Base class for every error raised by this package."""


class StructuralError(LocalOCOError, ValueError):
    """Shapes or dimensions do not line up."""


class UsageError(LocalOCOError, ValueError):
    """Caller supplied invalid arguments or an inconsistent configuration."""


class InfeasibleSetError(LocalOCOError):
    """A set that must be nonempty turned out to be empty."""


class NumericalError(LocalOCOError):
    """An iterative routine failed to converge.

    ``iterate`` and ``residual`` carry the last state so callers can log it.
    """

    def __init__(self, message, iterate=None, residual=None):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual


class ProtocolError(LocalOCOError):
    """The information protocol between learner and environment was violated."""


class DegenerateInputError(LocalOCOError):
    """Input hit a singular case the update rule cannot handle (e.g. zero gradient)."""
