"""Market-data exceptions."""

from ..errors import MriskError


class MarketDataError(MriskError):
    """Base exception for market-data errors."""
    pass


class DomainError(MarketDataError, ValueError):
    """An argument lies outside the function's domain (e.g. negative time)."""
    pass


class SnapshotNotFoundError(MarketDataError):
    """Snapshot file does not exist."""
    pass


class SnapshotParseError(MarketDataError):
    """Snapshot file is not valid JSON or does not follow the schema."""
    pass


class InvariantViolationError(MarketDataError):
    """A market-data invariant failed; ``invariant`` names it."""

    def __init__(self, invariant: str, message: str):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant
