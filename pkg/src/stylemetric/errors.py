"""Exception types shared across the package."""


class StylemetricError(Exception):
    """Base class for all errors raised by this package."""


class DatasetError(StylemetricError):
    """Missing, malformed, or degenerate dataset file."""


class IndexFormatError(StylemetricError):
    """Index file is corrupt, truncated, or not an index file at all."""


class IndexVersionError(IndexFormatError):
    """Index file was written with an incompatible format version."""


class UsageError(StylemetricError):
    """Invalid arguments to a scoring or protocol operation."""
