"""Exception hierarchy shared by every module of the package."""


class AugmentError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(AugmentError, ValueError):
    """Operands disagree on an axis, or an array has the wrong rank."""


class RangeError(AugmentError, ValueError):
    """A count, index or parameter lies outside its permitted range."""


class FormatError(AugmentError, ValueError):
    """A byte stream does not follow the expected file layout."""


class BadMagicError(FormatError):
    pass


class VersionError(FormatError):
    pass


class TruncatedError(FormatError):
    pass


class TrailingBytesError(FormatError):
    pass


class InvalidValueError(FormatError):
    """A payload decoded cleanly but holds values that violate an invariant."""


class ConsistencyError(FormatError):
    """Two artifacts that must describe the same batch disagree."""
