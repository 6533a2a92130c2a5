"""Shared fixtures: flat markets, small Monte Carlo configs and scratch stores."""

import shutil
from datetime import date
from pathlib import Path

import pytest

from src.engine import McConfig
from src.governance import InventoryStore, MappingStatus, ModelRecord, ModelStatus, ProductRecord
from src.market_data import DiscountCurve, EquityForwardInputs, ImpliedVolSurface, MarketSnapshot, load_snapshot

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def flat_market(
    vol: float = 0.20,
    rate: float = 0.01,
    carry: float = 0.0,
    spot: float = 100.0,
    correlation: float = 0.0,
) -> MarketSnapshot:
    return MarketSnapshot(
        as_of=date(2026, 6, 30),
        discount=DiscountCurve.flat(rate),
        equity=EquityForwardInputs(spot, DiscountCurve.flat(carry)),
        surface=ImpliedVolSurface.flat(vol),
        equity_rate_correlation=correlation,
        label=f"flat {vol:.0%}",
    )


@pytest.fixture
def market() -> MarketSnapshot:
    """Flat 20% vol, 1% rates, no carry, spot 100."""
    return flat_market()


@pytest.fixture
def market_factory():
    return flat_market


@pytest.fixture
def mc() -> McConfig:
    return McConfig(n_paths=8_000, steps_per_year=24, seed=7)


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def snapshot() -> MarketSnapshot:
    """The shipped representative snapshot."""
    return load_snapshot(DATA_DIR / "snapshot.json")


@pytest.fixture
def shipped_data(tmp_path) -> Path:
    """Writable copy of the shipped data directory."""
    target = tmp_path / "data"
    shutil.copytree(DATA_DIR, target)
    return target


@pytest.fixture
def store(tmp_path) -> InventoryStore:
    """Store with LV approved, HWLV restricted, an old decommissioned model and two families."""
    s = InventoryStore(tmp_path / "store.json", tmp_path / "audit.jsonl", actor="tester")
    s.register(ModelRecord(id="LV", name="Local vol", risk_tier=2, last_validation=date(2026, 1, 1), review_period=12))
    s.register(ModelRecord(id="HWLV", name="Hybrid", risk_tier=1, last_validation=date(2026, 1, 1), review_period=12))
    s.register(ModelRecord(id="OLD", name="Retired", risk_tier=3, last_validation=date(2020, 1, 1), review_period=12))
    s.register(ModelRecord(id="NEW", name="Candidate", risk_tier=1, last_validation=date(2026, 5, 1), review_period=6))
    s.register(ProductRecord(id="AC", family="autocallable", max_maturity=5.0))
    s.register(ProductRecord(id="VAN", family="vanilla", max_maturity=10.0, forward_start_allowed=True))
    for model_id in ("LV", "HWLV", "OLD"):
        s.set_status(model_id, ModelStatus.APPROVED)
    s.set_status("HWLV", ModelStatus.RESTRICTED)
    s.set_mapping("autocallable", "LV")
    s.set_mapping("autocallable", "HWLV")
    s.set_mapping("autocallable", "OLD")
    s.set_mapping("autocallable", "NEW")
    s.set_mapping("vanilla", "LV", MappingStatus.BLOCKED)
    s.set_status("OLD", ModelStatus.DECOMMISSIONED)
    return s
