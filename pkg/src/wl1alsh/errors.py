"""Exception hierarchy shared by every module."""


class ALSHError(Exception):
    """Base class for all library errors."""


class ParameterError(ALSHError, ValueError):
    """Invalid configuration value or inconsistent parameters."""


class DimensionError(ParameterError):
    """Operands disagree on dimensionality."""


class IngestionError(ALSHError, ValueError):
    """A data or query point failed validation on the way in."""


class IndexFormatError(ALSHError):
    """An index file is corrupt, truncated or of an unknown version."""
