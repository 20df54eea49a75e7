"""Exception types shared across the package."""


class GgmSelectError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(GgmSelectError, ValueError):
    """Malformed data, a parameter out of range, or mismatched shapes."""


class SingularInputError(GgmSelectError):
    """A matrix that must be strictly positive definite is not."""


class NotApplicableError(GgmSelectError):
    """The requested procedure is undefined at the given sample size."""


class GenerationError(GgmSelectError):
    """Random instance generation failed to produce a valid matrix."""


class UnmatchedNodeError(GgmSelectError):
    """Node names could not be mapped onto the variable universe."""


class DegenerateCorrelationWarning(UserWarning):
    """A sample partial correlation hit +-1, so its p-value is forced to 0."""
