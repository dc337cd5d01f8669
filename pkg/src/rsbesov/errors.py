"""Exception hierarchy shared by all modules.

Each class carries the process exit code the command-line runner maps it to.
"""


class RSBesovError(Exception):
    exit_code = 1


class InputError(RSBesovError, ValueError):
    """Malformed or out-of-range input."""

    exit_code = 2


class ConfigurationError(InputError):
    """A combination of settings that violates a precondition (e.g. a basis
    that is not smooth enough for the structure at hand)."""

    exit_code = 2


class NumericalError(RSBesovError, ArithmeticError):
    """A numerical procedure failed to meet its tolerance."""

    exit_code = 3


class ConvergenceError(NumericalError):
    pass


class ResourceError(RSBesovError, MemoryError):
    """A configured size cap would be exceeded."""

    exit_code = 4
