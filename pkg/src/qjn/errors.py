"""Exception types shared across the package."""


class QjnError(Exception):
    """Base class for all qjn errors."""


class SpecSyntaxError(QjnError):
    """Input document is not valid JSON."""


class SpecSchemaError(QjnError):
    """Document structure does not match the network schema."""


class SpecDomainError(QjnError):
    """A field value lies outside its legal domain."""


class SingularTrafficError(QjnError):
    """Traffic equations have no unique solution (routing traps flow)."""


class FeedForwardError(QjnError):
    """Operation requires an acyclic routing graph."""


class InstabilityError(QjnError):
    """Arrival rate at some node meets or exceeds its service rate."""


class InfeasibleError(QjnError):
    """No parameter value satisfies the stability constraints."""


class ToleranceError(QjnError):
    """A numerical routine could not reach the requested tolerance."""


class InsufficientDataError(QjnError):
    """Not enough samples to form the requested statistic."""
