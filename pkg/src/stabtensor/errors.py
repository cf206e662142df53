"""Exception hierarchy shared by every module."""


class StabTensorError(Exception):
    """Base class for library errors."""


class InvalidLevelError(StabTensorError, ValueError):
    pass


class DegreeOverflowError(StabTensorError):
    """Polynomial degree would exceed the configured cap.

    Refine the pieces (lower tail exponents) or raise ``fnalg.DEGREE_CAP``.
    """


class UnsupportedModulationError(StabTensorError):
    """Modulation of a function with a nonzero constant (unit) part."""


class QuadratureError(StabTensorError):
    def __init__(self, message, estimate, bound):
        super().__init__(message)
        self.estimate = estimate
        self.bound = bound


class HeavyTailError(StabTensorError):
    """Level search exceeded its cap."""


class TailClosureError(StabTensorError):
    pass


class WindowTooSmallError(StabTensorError):
    pass


class BaseMismatchError(StabTensorError):
    pass


class ConfigError(StabTensorError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
