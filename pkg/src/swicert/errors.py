"""Exception hierarchy.

Errors split into two families so the command line can map them onto exit
codes: configuration/domain problems (exit 2) and numerical failures (exit 3).
"""


class SwicertError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(SwicertError, ValueError):
    """Inputs are inconsistent with each other (missing pair, bad edge, ...)."""


class DimensionError(ConfigurationError):
    pass


class DomainError(ConfigurationError):
    """An argument lies outside the domain of the operation."""


class SynthesisUnavailable(ConfigurationError):
    """No constructive Lyapunov-like pair is available for a system."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class UndefinedStatistic(DomainError):
    pass


class InconsistentBundle(ConfigurationError):
    pass


class DivergentDensity(ConfigurationError):
    pass


class InsufficientData(ConfigurationError):
    pass


class InsufficientSwitches(ConfigurationError):
    pass


class NumericalFailure(SwicertError, ArithmeticError):
    """A numerical kernel could not produce a trustworthy answer."""

    def __init__(self, message, matrix=None):
        super().__init__(message)
        self.matrix = matrix


class NoUniqueSolution(NumericalFailure):
    """The Lyapunov operator is singular for the given matrix."""


class NotPositiveDefinite(NumericalFailure):
    pass
