"""Exception taxonomy shared across the package."""


class SieveLabError(Exception):
    """Base class for all package errors."""


class DomainError(SieveLabError):
    """Input outside an operation's mathematical domain."""


class RangeError(SieveLabError):
    """Input exceeds a configured table or enumeration range."""


class NotInvertibleError(DomainError):
    """Modular inverse requested for a non-unit."""


class ResourceCapError(SieveLabError):
    """An enumeration exceeded its configured size cap."""

    def __init__(self, message, count_estimate=None):
        super().__init__(message)
        self.count_estimate = count_estimate


class SplitInfeasibleError(SieveLabError):
    """No well-factorable split exists under the requested bounds."""


class DivergentIntegralError(SieveLabError):
    """The literal reading of an integral limit gives a divergent integrand."""


class ConsistencyError(SieveLabError):
    """Weight systems built from different parameter sets were combined."""


class ValidationError(SieveLabError):
    """Bad configuration; carries the offending field names."""

    def __init__(self, message, fields=()):
        super().__init__(message)
        self.fields = tuple(fields)
