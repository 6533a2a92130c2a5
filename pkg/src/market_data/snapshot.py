"""
Market snapshot: the pricing input bundle and its JSON file format.

File schema::

    {
      "as_of": "2012-06-10",
      "discount": {"times": [...], "zero_rates": [...]},
      "equity": {"spot": 2150.0, "carry_times": [...], "carry_rates": [...]},
      "surface": {"expiries": [...], "moneyness": [...], "vols": [...]},   # row-major
      "equity_rate_correlation": 0.3
    }
"""

import json
import logging
import math
from dataclasses import dataclass, replace
from datetime import date
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, ValidationError, model_validator

from .curves import DiscountCurve, EquityForwardInputs
from .errors import InvariantViolationError, SnapshotNotFoundError, SnapshotParseError
from .surface import ImpliedVolSurface

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MarketSnapshot:
    """Immutable market bundle as of one date."""

    as_of: date
    discount: DiscountCurve
    equity: EquityForwardInputs
    surface: ImpliedVolSurface
    equity_rate_correlation: float = 0.0
    label: Optional[str] = None

    def __post_init__(self) -> None:
        rho = float(self.equity_rate_correlation)
        object.__setattr__(self, "equity_rate_correlation", rho)
        if not (math.isfinite(rho) and -1.0 <= rho <= 1.0):
            raise InvariantViolationError("correlation_range", f"correlation {rho} outside [-1, 1]")

    @property
    def spot(self) -> float:
        return self.equity.spot

    # ---- copy-constructors used by greeks and FVA ----

    def bump_spot(self, factor: float) -> "MarketSnapshot":
        """Multiply the spot by ``factor``."""
        return replace(self, equity=EquityForwardInputs(self.equity.spot * factor, self.equity.carry_curve))

    def shift_vols(self, shift: float) -> "MarketSnapshot":
        """Parallel shift of the implied surface."""
        return replace(self, surface=self.surface.shifted(shift))

    def with_flat_carry(self, carry: float) -> "MarketSnapshot":
        """Replace the carry curve by a flat yield."""
        pillars = self.equity.carry_curve.pillar_times
        flat = DiscountCurve(pillars, tuple(carry for _ in pillars))
        return replace(self, equity=EquityForwardInputs(self.equity.spot, flat))

    def with_correlation(self, correlation: float) -> "MarketSnapshot":
        """Re-mark the equity-rate correlation."""
        return replace(self, equity_rate_correlation=correlation)


# ============== File schema ==============

class _CurveBlock(BaseModel):
    times: List[float]
    zero_rates: List[float]


class _EquityBlock(BaseModel):
    spot: float
    carry_times: List[float]
    carry_rates: List[float]


class _SurfaceBlock(BaseModel):
    expiries: List[float]
    moneyness: List[float]
    vols: List[float]

    @model_validator(mode="after")
    def check_size(self) -> "_SurfaceBlock":
        if len(self.vols) != len(self.expiries) * len(self.moneyness):
            raise ValueError(
                f"vols has {len(self.vols)} entries, expected "
                f"{len(self.expiries)}x{len(self.moneyness)} row-major"
            )
        return self


class SnapshotFile(BaseModel):
    """On-disk representation of a MarketSnapshot."""

    as_of: date
    discount: _CurveBlock
    equity: _EquityBlock
    surface: _SurfaceBlock
    equity_rate_correlation: float
    label: Optional[str] = None

    def to_snapshot(self) -> MarketSnapshot:
        n_k = len(self.surface.moneyness)
        rows = tuple(
            tuple(self.surface.vols[i * n_k:(i + 1) * n_k]) for i in range(len(self.surface.expiries))
        )
        return MarketSnapshot(
            as_of=self.as_of,
            discount=DiscountCurve(tuple(self.discount.times), tuple(self.discount.zero_rates)),
            equity=EquityForwardInputs(
                self.equity.spot,
                DiscountCurve(tuple(self.equity.carry_times), tuple(self.equity.carry_rates)),
            ),
            surface=ImpliedVolSurface(tuple(self.surface.expiries), tuple(self.surface.moneyness), rows),
            equity_rate_correlation=self.equity_rate_correlation,
            label=self.label,
        )

    @classmethod
    def from_snapshot(cls, snap: MarketSnapshot) -> "SnapshotFile":
        return cls(
            as_of=snap.as_of,
            discount=_CurveBlock(times=list(snap.discount.pillar_times), zero_rates=list(snap.discount.zero_rates)),
            equity=_EquityBlock(
                spot=snap.equity.spot,
                carry_times=list(snap.equity.carry_curve.pillar_times),
                carry_rates=list(snap.equity.carry_curve.zero_rates),
            ),
            surface=_SurfaceBlock(
                expiries=list(snap.surface.expiries),
                moneyness=list(snap.surface.moneyness),
                vols=[v for row in snap.surface.vols for v in row],
            ),
            equity_rate_correlation=snap.equity_rate_correlation,
            label=snap.label,
        )


def load_snapshot(path: Path) -> MarketSnapshot:
    """
    Load and validate a snapshot file.

    Raises:
        SnapshotNotFoundError: If the file does not exist
        SnapshotParseError: If the file is not JSON or breaks the schema
        InvariantViolationError: If a market-data invariant fails
    """
    path = Path(path)
    if not path.exists():
        raise SnapshotNotFoundError(f"Snapshot file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SnapshotParseError(f"Snapshot is not valid JSON: {path}: {e}")
    try:
        parsed = SnapshotFile.model_validate(raw)
    except ValidationError as e:
        raise SnapshotParseError(f"Snapshot does not follow the schema: {path}: {e}")

    snapshot = parsed.to_snapshot()
    logger.info(f"Loaded snapshot {path.name} as of {snapshot.as_of} (spot {snapshot.spot})")
    return snapshot


def write_snapshot(snapshot: MarketSnapshot, path: Path) -> None:
    """Write a snapshot in the file schema; floats keep their exact repr."""
    path = Path(path)
    payload = SnapshotFile.from_snapshot(snapshot).model_dump(mode="json", exclude_none=True)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
