"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class DivergenceError(ArithmeticError):
    """A quantity that was requested as finite diverges."""


class ClassificationError(ValueError):
    """A kernel or measure could not be placed in any admissible class."""


class UnsupportedError(ValueError):
    """The requested combination of inputs has no implementation."""


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


class NumericError(RuntimeError):
    """A numerical procedure did not reach its tolerance.

    ``estimate`` carries the residual or error estimate that was observed.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class BoundViolation(AssertionError):
    """A proven inequality failed beyond the allowed numerical slack."""

    def __init__(self, message, time=None, margin=None):
        super().__init__(message)
        self.time = time
        self.margin = margin
