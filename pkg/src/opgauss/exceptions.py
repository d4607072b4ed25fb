"""
Opgauss exceptions
"""


class OpgaussError(Exception):
    """An exception class for user-facing errors"""


class DomainError(OpgaussError, ValueError):
    """Invalid input: empty data, mismatched grids, parameters out of range."""


class NumericalError(OpgaussError, ArithmeticError):
    """A factorization, determinant or likelihood evaluation broke down."""


class UsageError(OpgaussError):
    """Invalid command-line configuration."""
