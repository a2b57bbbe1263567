"""Exception hierarchy shared by every dialab module."""


class DialabError(Exception):
    """Base class for all errors raised by dialab."""


class ParameterError(DialabError, ValueError):
    """A physical or numerical parameter is outside its valid range."""


class InputError(DialabError, ValueError):
    """Inputs are structurally inconsistent (grid mismatch, empty ensemble, ...)."""


class DomainError(DialabError, ValueError):
    """A closed-form expression is evaluated outside its domain of validity."""


class DivergenceError(DialabError, FloatingPointError):
    """A time-stepper produced a non-finite or runaway state."""

    def __init__(self, message, step=None, sample=None):
        super().__init__(message)
        self.step = step
        self.sample = sample


class AccuracyError(DialabError, ArithmeticError):
    """Embedded step-halving check exceeded the requested tolerance."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class PoleError(DialabError, ZeroDivisionError):
    """A continued-fraction level denominator vanished."""

    def __init__(self, message, level=None):
        super().__init__(message)
        self.level = level


class InversionError(DialabError, ArithmeticError):
    """Numerical Laplace inversion did not reach its tolerance."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class FitError(DialabError, RuntimeError):
    """Nonlinear least-squares fit failed or was rejected."""


class ConfigError(DialabError, ValueError):
    """Run configuration failed validation."""

    def __init__(self, message, field=None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
