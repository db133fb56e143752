"""Exception types shared across the package."""


class PTRError(Exception):
    """Base class for all package errors."""


class DomainError(PTRError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigError(PTRError, ValueError):
    """A scenario or run configuration is invalid.

    ``field`` names the offending configuration key when one is known.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ConvergenceError(PTRError, RuntimeError):
    """An iterative fit did not converge.

    The best iterate reached is kept on ``best`` and its error on ``rmse``
    (when meaningful) so callers can still inspect it.
    """

    def __init__(self, message, best=None, rmse=None):
        super().__init__(message)
        self.best = best
        self.rmse = rmse
