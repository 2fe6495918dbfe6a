"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid parameters or configuration values.

    ``key`` names the offending configuration key when one is known.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class NumericError(ArithmeticError):
    """A kernel or estimator produced a non-finite value."""


class DegenerateVarianceError(RuntimeError):
    """The asymptotic variance is indistinguishable from zero."""
