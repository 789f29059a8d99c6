"""Exception types shared across the package."""


class RelayError(Exception):
    """Base class for all package errors."""


class ZeroRelayLink(RelayError):
    """The relay-to-destination gain is zero, so the compression distortion is unbounded."""


class NonpositiveDistortion(RelayError):
    """A Wyner-Ziv distortion that is not strictly positive was supplied."""


class ZeroCoefficients(RelayError):
    """An all-zero integer equation was supplied where a nonzero one is required."""


class SingularEquations(RelayError):
    """The two integer equations are linearly dependent (|det(k, t)| < 1)."""


class Infeasible(RelayError):
    """No integer pair satisfies the constraints of the selection problem."""


class InfeasibleGP(RelayError):
    """The geometric program has no strictly feasible point."""


class MaxIterations(RelayError):
    """An iterative solver hit its iteration cap; the best iterate is attached."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class NonConvergence(RelayError):
    """An outer loop did not meet its stopping rule; the best iterate is attached."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConfigError(RelayError):
    """Invalid sweep configuration; the message names the offending field."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
