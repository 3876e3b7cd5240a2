"""Exception hierarchy shared by all modules."""


class ArgminError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ArgminError, ValueError):
    pass


class NonConvergence(ArgminError, ArithmeticError):
    pass


class UnstableInversion(ArgminError, ArithmeticError):
    pass


class GridMismatch(ArgminError, ValueError):
    pass


class GridTooCoarse(ArgminError, ValueError):
    pass


class EmptySample(ArgminError, ValueError):
    pass


class InvalidGrid(ArgminError, ValueError):
    pass


class ModelMismatch(ArgminError, TypeError):
    pass


class SubordinatorRejected(DomainError):
    """Raised when X or -X is a subordinator; the argmin process is then trivial."""


class WindowTooLarge(ArgminError, ValueError):
    pass


class NonIntegerWindow(ArgminError, ValueError):
    pass


class HorizonTooShort(ArgminError, ValueError):
    pass


class NotFound(ArgminError, LookupError):
    pass


class TooLarge(ArgminError, ValueError):
    pass


class InsufficientConditionedSamples(ArgminError, RuntimeError):
    pass
