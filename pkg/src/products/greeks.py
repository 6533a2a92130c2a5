"""
Bump-and-revalue greeks with common random numbers.

Every revaluation reuses the same seed. Spot bumps keep the base leverage;
vol and correlation bumps recalibrate it. Greeks are in currency of the
trade: delta per unit of spot, vega per unit of vol (not per vol point),
correlation sensitivity per unit of correlation.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from ..engine.models import McConfig, ModelSpec
from ..engine.pricer import prepare_model, price_pathwise
from ..market_data.snapshot import MarketSnapshot
from .base import Product
from .errors import UnsupportedMetricError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GreekBumps:
    """Relative spot bump, absolute vol shift and absolute correlation shift."""

    spot: float = 0.01
    vol: float = 0.01
    correlation: float = 0.05

    def __post_init__(self) -> None:
        if not (self.spot > 0.0 and self.vol > 0.0 and self.correlation > 0.0):
            raise ValueError("bump sizes must be > 0")


@dataclass(frozen=True)
class Sensitivity:
    """A greek with the bump sizes it was computed with."""

    value: float
    bumps: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"value": self.value, "bumps": dict(self.bumps)}


@dataclass(frozen=True)
class GreeksReport:
    delta: Sensitivity
    gamma: Sensitivity
    vega: Sensitivity
    vanna: Sensitivity
    correlation_sensitivity: Optional[Sensitivity] = None
    base_value: float = 0.0

    def metric(self, name: str) -> Optional[Sensitivity]:
        """Sensitivity by name; None when the model does not define it."""
        if name not in ("delta", "gamma", "vega", "vanna", "correlation_sensitivity"):
            raise KeyError(name)
        return getattr(self, name)

    def to_dict(self) -> dict:
        out = {"base_value": self.base_value}
        for name in ("delta", "gamma", "vega", "vanna", "correlation_sensitivity"):
            s = getattr(self, name)
            out[name] = None if s is None else s.to_dict()
        return out


def greeks(
    product: Product,
    model: ModelSpec,
    market: MarketSnapshot,
    config: McConfig,
    bumps: GreekBumps = GreekBumps(),
    correlation: Optional[bool] = None,
) -> GreeksReport:
    """
    Central finite-difference greeks.

    Args:
        product: Product to revalue; its fixing is pinned to the base spot
        model: LV or HWLV spec
        market: Base market
        config: Monte Carlo settings shared by every revaluation
        bumps: Bump sizes
        correlation: Compute the correlation sensitivity (default: HWLV only)

    Raises:
        UnsupportedMetricError: Correlation sensitivity requested under LV
    """
    want_rho = model.is_hybrid if correlation is None else correlation
    if want_rho and not model.is_hybrid:
        raise UnsupportedMetricError("correlation sensitivity is only defined for HWLV")

    product = product.with_reference(product.reference if product.reference is not None else market.spot)
    notional = product.notional

    def value(m: ModelSpec, mkt: MarketSnapshot) -> float:
        return float(np.mean(price_pathwise(product, m, mkt, config))) * notional

    base_model = prepare_model(model, market, product.horizon, config)
    vol_up_market = market.shift_vols(bumps.vol)
    vol_dn_market = market.shift_vols(-bumps.vol)
    vol_up_model = prepare_model(model.without_leverage(), vol_up_market, product.horizon, config)
    vol_dn_model = prepare_model(model.without_leverage(), vol_dn_market, product.horizon, config)

    ds = market.spot * bumps.spot
    v0 = value(base_model, market)
    v_up = value(base_model, market.bump_spot(1.0 + bumps.spot))
    v_dn = value(base_model, market.bump_spot(1.0 - bumps.spot))
    vol_up = value(vol_up_model, vol_up_market)
    vol_dn = value(vol_dn_model, vol_dn_market)
    corner_uu = value(vol_up_model, vol_up_market.bump_spot(1.0 + bumps.spot))
    corner_ud = value(vol_dn_model, vol_dn_market.bump_spot(1.0 + bumps.spot))
    corner_du = value(vol_up_model, vol_up_market.bump_spot(1.0 - bumps.spot))
    corner_dd = value(vol_dn_model, vol_dn_market.bump_spot(1.0 - bumps.spot))

    spot_bumps = {"spot_relative": bumps.spot, "spot_absolute": ds}
    vol_bumps = {"vol": bumps.vol}
    delta = Sensitivity((v_up - v_dn) / (2.0 * ds), spot_bumps)
    gamma = Sensitivity((v_up - 2.0 * v0 + v_dn) / (ds * ds), spot_bumps)
    vega = Sensitivity((vol_up - vol_dn) / (2.0 * bumps.vol), vol_bumps)
    vanna = Sensitivity(
        (corner_uu - corner_ud - corner_du + corner_dd) / (4.0 * ds * bumps.vol),
        {**spot_bumps, **vol_bumps},
    )

    rho_sens = None
    if want_rho:
        rho = model.equity_rate_correlation
        rho_up = min(1.0, rho + bumps.correlation)
        rho_dn = max(-1.0, rho - bumps.correlation)
        up = value(prepare_model(model.with_correlation(rho_up), market, product.horizon, config), market)
        dn = value(prepare_model(model.with_correlation(rho_dn), market, product.horizon, config), market)
        rho_sens = Sensitivity((up - dn) / (rho_up - rho_dn), {"correlation": bumps.correlation})

    report = GreeksReport(delta, gamma, vega, vanna, rho_sens, base_value=v0)
    logger.info(
        f"Greeks for {product.family}: delta={delta.value:.6g} gamma={gamma.value:.6g} "
        f"vega={vega.value:.6g} vanna={vanna.value:.6g}"
    )
    return report
