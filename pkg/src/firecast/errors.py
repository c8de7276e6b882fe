"""Exception types shared across the package."""


class FirecastError(Exception):
    """Base class for all errors raised by firecast."""


class ShapeError(FirecastError):
    """Operands or tensors have incompatible shapes."""


class DataError(FirecastError):
    """A series violates a structural requirement (gaps, length, range)."""


class ParseError(DataError):
    """A CSV row could not be parsed.

    Carries the 1-based line number when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class StateError(FirecastError):
    """A cached trace does not match the forward pass it claims to come from."""


class NumericError(FirecastError):
    """A non-finite value appeared where a finite one is required."""


class CheckpointError(FirecastError):
    """Base class for checkpoint container problems."""


class BadMagicError(CheckpointError):
    """The file does not start with the checkpoint magic tag."""


class UnsupportedVersionError(CheckpointError):
    """The checkpoint format version is not supported by this build."""


class IntegrityError(CheckpointError):
    """Checksum mismatch or truncated tensor region."""
