"""Exception hierarchy shared by all stages."""


class ManiconnError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(ManiconnError):
    """Bad or missing configuration (maps to CLI exit code 2)."""


class NumericsError(ManiconnError):
    """Numerical failure in a stage (maps to CLI exit code 3)."""


class SingularityError(NumericsError):
    """A trajectory came within the guard radius of a primary."""


class NoConvergenceError(NumericsError):
    """An iterative solve ran out of iterations.

    Carries the final residual so callers can report how close it got.
    """

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SingularSystemError(NumericsError):
    """A linear system was too ill-conditioned to solve reliably."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class HyperbolicityError(NumericsError):
    """The invariant circle is not usably unstable."""


class ResonanceError(NumericsError):
    """Small divisor hit in the order-by-order manifold recursion."""

    def __init__(self, message, order=None):
        super().__init__(message)
        self.order = order


class FileFormatError(ManiconnError):
    """Malformed binary or text artifact file (maps to CLI exit code 4)."""
