"""Exception types raised across the package."""


class BigLearnError(Exception):
    """Base class for all package errors."""


class FactorizationFailure(BigLearnError):
    """A covariance matrix could not be Cholesky-factorized (not SPD)."""


class DegenerateWeights(BigLearnError):
    """Weights sum to zero, so a weighted moment is undefined."""


class DimensionMismatch(BigLearnError, ValueError):
    pass


class LengthMismatch(BigLearnError, ValueError):
    pass


class ParseError(BigLearnError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyFile(BigLearnError, ValueError):
    pass
