"""Market data: curves, implied surface, Dupire local vol and snapshots."""

from .curves import DiscountCurve, EquityForwardInputs, discount_factor, forward_price, log_forward
from .errors import (
    DomainError,
    InvariantViolationError,
    MarketDataError,
    SnapshotNotFoundError,
    SnapshotParseError,
)
from .local_vol import dupire_local_vol, local_vol_from_moneyness
from .snapshot import MarketSnapshot, load_snapshot, write_snapshot
from .surface import ImpliedVolSurface, implied_vol

__all__ = [
    "DiscountCurve",
    "EquityForwardInputs",
    "ImpliedVolSurface",
    "MarketSnapshot",
    "discount_factor",
    "forward_price",
    "log_forward",
    "implied_vol",
    "dupire_local_vol",
    "local_vol_from_moneyness",
    "load_snapshot",
    "write_snapshot",
    "MarketDataError",
    "DomainError",
    "SnapshotNotFoundError",
    "SnapshotParseError",
    "InvariantViolationError",
]
