"""Exception hierarchy shared by all modules.

The CLI maps each family to an exit code, so library code raises the most
specific subclass it can.
"""


class BandawareError(Exception):
    exit_code = 3


class UsageError(BandawareError, ValueError):
    """Bad arguments or references to things that do not exist."""

    exit_code = 1


class InputError(BandawareError, ValueError):
    """Malformed or inconsistent input data."""

    exit_code = 2


class ComputationError(BandawareError, ArithmeticError):
    """A quantity is undefined for the given (valid) input."""

    exit_code = 3
