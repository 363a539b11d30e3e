"""Exception taxonomy shared across the package.

Everything raised on purpose derives from HopsError so callers (and the CLI)
can distinguish data/usage problems from genuine bugs.
"""

from __future__ import annotations


class HopsError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(HopsError):
    """A descriptor file violates the binary format.

    Carries the byte offset at which parsing failed.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class ValidationError(HopsError):
    """Content is structurally readable but violates an invariant."""


class AlignmentError(HopsError):
    """Sets that must share a row count do not."""


class DimensionError(HopsError):
    """Sets or matrices that must share a dimension/shape do not."""


class DuplicateSourceError(HopsError):
    """A condition would be bundled into a fusion twice."""


class FrameLookupError(HopsError, LookupError):
    """A referenced frame id does not exist in the set."""


class LeakageError(HopsError):
    """A query set would take part in building its own references."""


class ConfigError(HopsError):
    """An evaluation or CLI configuration is inconsistent with the data."""
