"""Exception hierarchy shared by every module."""


class HarmregError(Exception):
    """Base class for all library errors."""


class DomainError(HarmregError, ValueError):
    """An argument lies outside the set where the operation is defined."""


class ArgumentError(HarmregError, ValueError):
    pass


class ConfigError(HarmregError, ValueError):
    pass


class DegenerateMajorantError(HarmregError, ValueError):
    pass


class PreconditionError(HarmregError, ValueError):
    pass


class NotTransversalError(PreconditionError):
    pass


class DegenerateCurveError(HarmregError, ValueError):
    pass


class OutsideTubularNeighbourhoodError(HarmregError, RuntimeError):
    pass


class LambdaTooSmallError(PreconditionError):
    pass


class NumericalError(HarmregError, RuntimeError):
    """A numerical routine failed; ``diagnostics`` carries whatever was known."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
