"""Exception hierarchy shared by every module.

Each class also derives from the closest builtin so callers that only know
about ``ValueError`` and friends still catch them.
"""


class EmRestoreError(Exception):
    """Base class for all errors raised by this package."""


class RangeError(EmRestoreError, ValueError):
    """An index, region or scalar argument lies outside its valid range."""


class SizeError(EmRestoreError, ValueError):
    """Array shapes are incompatible with the requested operation."""


class DegenerateInputError(EmRestoreError, ArithmeticError):
    """Normalization is undefined (constant input)."""


class NotFoundError(EmRestoreError, LookupError):
    """A requested registry entry does not exist."""


class ParseError(EmRestoreError, ValueError):
    """A byte stream or text file is malformed."""


class StateError(EmRestoreError, RuntimeError):
    """An object is used before it is ready (e.g. missing running stats)."""


class ConfigError(EmRestoreError, ValueError):
    """Inconsistent configuration values."""
