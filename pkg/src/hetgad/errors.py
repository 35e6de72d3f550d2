"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage errors exit 1, data errors
exit 2, numerical failures exit 3.
"""


class HetgadError(Exception):
    """Base class for all package errors."""


class UsageError(HetgadError):
    """Bad arguments or option combinations (CLI exit code 1)."""


class DataError(HetgadError):
    """Malformed or inconsistent graph/bundle/model data (CLI exit code 2)."""


class NumericalError(HetgadError):
    """Non-finite values or diverging optimization (CLI exit code 3)."""
