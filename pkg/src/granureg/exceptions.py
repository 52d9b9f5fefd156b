"""Exception types raised across the package."""


class GranuregError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(GranuregError, ValueError):
    """A vector's length does not match the expected dimensionality."""


class EmptyModelError(GranuregError, ValueError):
    """An operation that needs at least one granule received none."""


class EmptyBatchError(GranuregError, ValueError):
    """A batch operation received no instances."""


class InsufficientSamplesError(GranuregError, ValueError):
    """A statistic needs more samples than were provided."""


class ColdStartError(GranuregError, RuntimeError):
    """A prediction was requested before any batch has been observed."""


class SchemaError(GranuregError, ValueError):
    """A stream schema, generator spec, or config is inconsistent."""
