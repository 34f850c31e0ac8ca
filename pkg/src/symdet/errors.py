"""Exception and warning types shared across the library."""


class SymdetError(Exception):
    """Base class for all library-specific errors."""


class NotPositiveDefinite(SymdetError):
    """A matrix required to be symmetric positive definite is not."""


class DimensionMismatch(SymdetError):
    """Vector/matrix shapes are inconsistent with each other."""


class InvalidModel(SymdetError):
    """Scenario or model parameters outside their admissible range."""


class DegenerateToConstant(SymdetError):
    """A derivative polynomial vanished identically; the objective is flat
    along the coordinate and the caller should keep the current value."""


class InsufficientTrials(SymdetError):
    """Too few Monte-Carlo trials to place a threshold at the requested
    false-alarm probability."""


class MalformedHeader(SymdetError):
    """A cube file header is inconsistent with its payload."""


class TruncatedPayload(SymdetError):
    """A cube file ended before the declared number of samples."""


class NonFinitePayload(SymdetError):
    """A cube file contains NaN or infinite samples."""


class InsufficientWindows(UserWarning):
    """Fewer sliding windows than recommended for the target Pfa (warning)."""
