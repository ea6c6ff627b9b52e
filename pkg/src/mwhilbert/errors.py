"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`MwHilbertError`.
The CLI maps the three families below onto exit codes.
"""


class MwHilbertError(Exception):
    """Base class for all package errors."""


class ValidationError(MwHilbertError, ValueError):
    """Invalid parameters or configuration (CLI exit code 2)."""


class NumericalError(MwHilbertError, ArithmeticError):
    """A computation could not reach the requested accuracy (CLI exit code 3)."""


class DataError(MwHilbertError):
    """Malformed input data such as a bad Touchstone file (CLI exit code 4)."""


class ConfigurationError(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class RangeError(ValidationError):
    pass


class CoverageError(ValidationError):
    pass


class SingularSampleError(NumericalError):
    """A response sample has zero magnitude, so its phase is undefined."""

    def __init__(self, message: str, frequency_hz: float):
        super().__init__(message)
        self.frequency_hz = frequency_hz


class ResolutionError(NumericalError):
    """The frequency grid is too coarse to unwrap the phase unambiguously."""


class SingularityError(NumericalError):
    pass


class NotFoundError(NumericalError):
    pass


class QuadratureError(NumericalError):
    def __init__(self, message: str, achieved_tolerance: float):
        super().__init__(message)
        self.achieved_tolerance = achieved_tolerance


class TouchstoneParseError(DataError):
    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number
