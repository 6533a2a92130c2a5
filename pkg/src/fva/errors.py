"""FVA exceptions."""

from ..errors import MriskError


class FvaError(MriskError):
    """Base exception for FVA computations."""
    pass


class UnknownParameterError(FvaError):
    """Parameter name does not resolve to a bumpable pricer input."""
    pass


class InsufficientSamplesError(FvaError):
    """Fewer samples or variants than the method needs."""
    pass


class UnsupportedModeError(FvaError):
    """Embedded mode requested for a method with no single bookable parameter."""
    pass

