"""Exception types shared across the package.

The CLI maps these onto exit codes: usage problems exit 1, DataError
exits 2, and everything else derived from PThoughtError exits 3.
"""


class PThoughtError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(PThoughtError):
    """Operand shapes do not conform; the message names both shapes."""


class DomainError(PThoughtError):
    """Input is outside an operation's mathematical domain."""


class DataError(PThoughtError):
    """Malformed input file or corpus; carries a line number where possible."""


class NumericError(PThoughtError):
    """Non-finite value produced where a finite one is required."""
