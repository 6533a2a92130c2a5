"""Engine exceptions."""

from ..errors import MriskError


class ConfigurationError(MriskError):
    """Model, Monte Carlo or product configuration cannot be simulated."""
    pass


class HorizonMismatchError(ConfigurationError):
    """Product dates fall beyond the simulated or calibrated horizon."""
    pass


class GridMisalignmentError(ConfigurationError):
    """A product date does not lie on the simulated time grid."""
    pass
