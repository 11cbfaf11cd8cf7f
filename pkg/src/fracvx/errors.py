"""Exception hierarchy shared by all modules."""


class FracvxError(Exception):
    """Base class for library errors."""


class DomainError(FracvxError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ParameterError(FracvxError, ValueError):
    """Invalid numerical parameter (mesh size, grading, weight exponent...)."""


class ParseError(FracvxError, ValueError):
    """Expression text could not be parsed.

    Attributes
    ----------
    position : int
        Zero-based character offset of the offending token.
    """

    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class RangeViolation(FracvxError, ValueError):
    """Exponent leaves the admissible range."""


class NotSmooth(FracvxError, ValueError):
    """Exponent cannot be differentiated somewhere on the validation grid."""


class RegimeError(FracvxError, ValueError):
    """Operation not defined for the exponent's regime."""


class QuadratureFailure(FracvxError, ArithmeticError):
    """Quadrature could not meet its accuracy target."""


class IllConditioned(FracvxError, ArithmeticError):
    """Near-singular diagonal in a triangular solve."""


class InvalidInitialValue(FracvxError, ValueError):
    """Initial value incompatible with the exponent regime (ill-posed problem)."""


class FitError(FracvxError, ValueError):
    """Log-log fit impossible on the requested window."""


class SignChange(FitError):
    """Values change sign inside the fitting window."""


class DegenerateWindow(FitError):
    """Fewer than four usable points in the fitting window."""
