"""Exception types shared across the package.

The CLI maps these onto exit codes: PreconditionError -> 3,
NumericalError -> 4, anything raised while parsing input files -> 2.
"""


class IpcapError(Exception):
    """Base class for all errors raised by this package."""


class PreconditionError(IpcapError):
    """An operation was called outside its documented domain."""


class NumericalError(IpcapError):
    """A computation produced non-finite or otherwise unusable values."""
