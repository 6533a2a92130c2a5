"""Product exceptions."""

from ..engine.errors import ConfigurationError, GridMisalignmentError
from ..errors import MriskError


class ProductError(MriskError):
    """Base exception for product definition problems."""
    pass


class UnsupportedMetricError(ProductError):
    """A sensitivity was requested that the model does not define."""
    pass


class ProductFileError(ProductError, ConfigurationError):
    """Product file is missing, unreadable or invalid."""
    pass


__all__ = [
    "ProductError",
    "UnsupportedMetricError",
    "ProductFileError",
    "GridMisalignmentError",
]
