"""Exception types raised across the package."""


class SanError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(SanError, ValueError):
    pass


class DegenerateInputError(SanError, ValueError):
    """Input carries no usable signal (zero variance, all zeros, ...)."""


class UnsupportedRankError(SanError, ValueError):
    pass


class FormatError(SanError, ValueError):
    """Binary or text container does not follow its declared layout."""


class ParseError(SanError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
