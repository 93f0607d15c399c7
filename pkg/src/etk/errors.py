"""Exception hierarchy shared by all etk modules."""


class EtkError(Exception):
    """Base class for every error raised by etk."""


class ParameterError(EtkError, ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class ArgumentError(EtkError, ValueError):
    pass


class SingularGreenError(EtkError, ArithmeticError):
    def __init__(self, message, level=None):
        if level is not None:
            message = f"{message} (hierarchy level {level})"
        super().__init__(message)
        self.level = level


class SingularDenominatorError(EtkError, ArithmeticError):
    pass


class LevelMismatchError(EtkError, ValueError):
    pass


class ConvergenceError(EtkError, RuntimeError):
    def __init__(self, message, previous=None, last=None):
        super().__init__(message)
        self.previous = previous
        self.last = last


class NonpositiveRateError(EtkError, ArithmeticError):
    def __init__(self, forward, backward):
        super().__init__(
            f"rate constants must be positive to take logarithms "
            f"(k={forward!r}, k'={backward!r}); the semiclassical bath "
            f"is likely outside its validity range"
        )
        self.forward = forward
        self.backward = backward


class StabilityError(EtkError, RuntimeError):
    pass


class NotEquilibratedError(EtkError, RuntimeError):
    pass


class PoorFitError(EtkError, RuntimeError):
    def __init__(self, message, r_squared=None):
        super().__init__(message)
        self.r_squared = r_squared
