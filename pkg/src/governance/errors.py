"""Governance exceptions."""

from ..errors import MriskError


class GovernanceError(MriskError):
    """Base exception for inventory and control failures."""
    pass


class IllegalTransitionError(GovernanceError):
    """Model status change not allowed by the lifecycle."""
    pass


class UnknownRecordError(GovernanceError):
    """Id does not resolve to a record in the store."""
    pass


class DuplicateRecordError(GovernanceError):
    """A record with this id is already registered."""
    pass


class GovernanceBlockError(GovernanceError):
    """Pricing refused by a product-model mapping check."""
    pass


class LimitConfigurationError(GovernanceError):
    """Limit on a metric the greeks report does not carry."""
    pass
