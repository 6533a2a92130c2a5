"""
Registry of non-calibrated pricer inputs that FVA methods move.

Each entry reads the current (marked) value from a (model, market) pair and
returns a new pair with the value replaced. Any HWLV leverage is dropped so
it is recalibrated against the moved inputs.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Sequence, Tuple

import numpy as np
import pandas as pd

from ..engine.hull_white import HullWhiteParams
from ..engine.models import ModelSpec
from ..market_data.snapshot import MarketSnapshot
from .errors import InsufficientSamplesError, UnknownParameterError

State = Tuple[ModelSpec, MarketSnapshot]


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    description: str
    default_bump: float
    read: Callable[[ModelSpec, MarketSnapshot, float], float]
    write: Callable[[ModelSpec, MarketSnapshot, float], State]
    hybrid_only: bool = False


def _read_correlation(model: ModelSpec, market: MarketSnapshot, horizon: float) -> float:
    return model.equity_rate_correlation if model.is_hybrid else market.equity_rate_correlation


def _write_correlation(model: ModelSpec, market: MarketSnapshot, value: float) -> State:
    market = market.with_correlation(value)
    if model.is_hybrid:
        model = model.with_correlation(value)
    return model, market


def _read_dividend(model: ModelSpec, market: MarketSnapshot, horizon: float) -> float:
    return float(market.equity.carry_curve.zero_rate(horizon))


def _write_dividend(model: ModelSpec, market: MarketSnapshot, value: float) -> State:
    return model.without_leverage(), market.with_flat_carry(value)


def _write_mean_reversion(model: ModelSpec, market: MarketSnapshot, value: float) -> State:
    return model.with_hw(HullWhiteParams(value, model.hw.rate_vol)), market


def _write_rate_vol(model: ModelSpec, market: MarketSnapshot, value: float) -> State:
    return model.with_hw(HullWhiteParams(model.hw.mean_reversion, value)), market


def _write_vol_shift(model: ModelSpec, market: MarketSnapshot, value: float) -> State:
    return model.without_leverage(), market.shift_vols(value)


PARAMETERS: Dict[str, ParameterSpec] = {
    "equity_rate_correlation": ParameterSpec(
        "equity_rate_correlation", "Equity-rate correlation", 0.05, _read_correlation, _write_correlation
    ),
    "dividend_yield": ParameterSpec(
        "dividend_yield", "Flat continuous carry (dividend net of repo)", 0.001, _read_dividend, _write_dividend
    ),
    "mean_reversion": ParameterSpec(
        "mean_reversion", "Hull-White mean reversion", 0.01,
        lambda m, mk, h: m.hw.mean_reversion, _write_mean_reversion, hybrid_only=True,
    ),
    "rate_vol": ParameterSpec(
        "rate_vol", "Hull-White short-rate vol", 0.001,
        lambda m, mk, h: m.hw.rate_vol, _write_rate_vol, hybrid_only=True,
    ),
    "vol_shift": ParameterSpec(
        "vol_shift", "Parallel shift of the implied surface", 0.01,
        lambda m, mk, h: 0.0, _write_vol_shift,
    ),
}


def resolve_parameter(name: str, model: ModelSpec) -> ParameterSpec:
    """
    Registry entry for ``name``.

    Raises:
        UnknownParameterError: Unknown name, or an HWLV-only parameter under LV
    """
    spec = PARAMETERS.get(name)
    if spec is None:
        raise UnknownParameterError(f"Unknown parameter '{name}', expected one of {sorted(PARAMETERS)}")
    if spec.hybrid_only and not model.is_hybrid:
        raise UnknownParameterError(f"Parameter '{name}' is not an input of {model.kind.value}")
    return spec


def apply_parameter(name: str, model: ModelSpec, market: MarketSnapshot, value: float) -> State:
    return resolve_parameter(name, model).write(model, market, value)


def marked_value(name: str, model: ModelSpec, market: MarketSnapshot, horizon: float) -> float:
    return resolve_parameter(name, model).read(model, market, horizon)


@dataclass(frozen=True)
class ParameterSample:
    """Historical values of one parameter."""

    name: str
    samples: Tuple[float, ...]

    def __post_init__(self) -> None:
        if self.name not in PARAMETERS:
            raise UnknownParameterError(f"Unknown parameter '{self.name}'")
        values = tuple(float(v) for v in self.samples)
        if len(values) < 2:
            raise InsufficientSamplesError(f"'{self.name}' needs at least 2 samples, got {len(values)}")
        if not all(math.isfinite(v) for v in values):
            raise InsufficientSamplesError(f"'{self.name}' samples must be finite")
        object.__setattr__(self, "samples", values)

    @property
    def collapsed(self) -> bool:
        """All samples equal."""
        return float(np.ptp(self.samples)) == 0.0

    def quantiles(self, p_lo: float, p_hi: float) -> Tuple[float, float]:
        """Empirical quantiles with linear interpolation between order statistics."""
        lo, hi = np.quantile(np.array(self.samples), [p_lo, p_hi], method="linear")
        return float(lo), float(hi)

    def shrunk(self, factor: float) -> "ParameterSample":
        """Samples pulled toward their median by ``factor`` in [0, 1]."""
        median = float(np.median(self.samples))
        return ParameterSample(self.name, tuple(median + factor * (v - median) for v in self.samples))


def load_samples(name: str, path: Path) -> ParameterSample:
    """
    Read samples from a CSV (column named after the parameter, or the first
    column) or a JSON array.
    """
    path = Path(path)
    if not path.exists():
        raise InsufficientSamplesError(f"Samples file not found: {path}")
    if path.suffix.lower() == ".json":
        values: Sequence[float] = json.loads(path.read_text(encoding="utf-8"))
    else:
        frame = pd.read_csv(path)
        column = name if name in frame.columns else frame.columns[0]
        values = frame[column].dropna().astype(float).tolist()
    return ParameterSample(name, tuple(values))
