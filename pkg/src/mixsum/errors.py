"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`MixsumError`.  The CLI maps :class:`ValidationError` to exit code 2
and :class:`NumericalError` to exit code 3.
"""


class MixsumError(Exception):
    """Base class for package errors."""


class ValidationError(MixsumError, ValueError):
    """Bad input: wrong dimensions, violated preconditions, malformed files."""


class NumericalError(MixsumError, ArithmeticError):
    """A numerical procedure could not produce a valid result."""


class DimensionError(ValidationError):
    pass


class KernelError(ValidationError):
    """Invalid kernel parameters."""


class ParseError(ValidationError):
    """Malformed input file.

    Parameters
    ----------
    message : str
    path : str, optional
    line : int, optional
        1-based line (or row) number of the offending record.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class CovarianceError(NumericalError):
    """Covariance not factorizable even after ridge regularization."""


class DegenerateFitError(NumericalError):
    """EM or k-means could not produce a non-degenerate fit."""


class TooManyFailuresError(NumericalError):
    """Per-draw failures exceeded the allowed fraction."""
