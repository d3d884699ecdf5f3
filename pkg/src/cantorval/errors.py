"""Exception hierarchy shared by every module of the package."""


class CantorvalError(ValueError):
    """Base class for all input and domain errors raised here."""


class MalformedDigitError(CantorvalError):
    """A digit lies outside the alphabet allowed for the base."""


class NotRewritableError(CantorvalError):
    """A pair rewrite was requested where its precondition fails."""


class DomainError(CantorvalError):
    """An argument lies outside the domain of an operation."""


class WrongBaseError(CantorvalError):
    """The base does not satisfy an operation's requirement (e.g. s = 4, s even)."""


class InvalidLawError(CantorvalError):
    """A digit law violates normalisation, non-negativity or non-degeneracy."""


class ResourceLimitError(RuntimeError):
    """A computation would exceed the configured memory/size guard."""
