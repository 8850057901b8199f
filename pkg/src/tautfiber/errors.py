"""Exception hierarchy shared across modules."""


class TautFiberError(Exception):
    """Base class for domain errors (CLI exit status 1)."""


class PreconditionError(TautFiberError, ValueError):
    pass


class MalformedGluing(TautFiberError):
    pass


class NonOrientable(TautFiberError):
    pass


class ResourceBudgetExceeded(TautFiberError):
    pass


class IncompatibleQuadTypes(TautFiberError):
    pass


class NoRepresentativeFound(TautFiberError):
    pass


class ZeroSurface(TautFiberError):
    pass


class Disconnected(TautFiberError):
    pass


class IllDefinedOnRelators(TautFiberError):
    pass


class DepthBudgetExceeded(TautFiberError):
    pass


class NonAbelianQuotient(TautFiberError):
    pass


class UnverifiedInput(TautFiberError):
    pass


class NoProgress(TautFiberError):
    pass


class BudgetExhausted(TautFiberError):
    pass
