"""
Monte Carlo pricing: pathwise discounted cashflows averaged over paths.
"""

import logging
import math
from typing import TYPE_CHECKING, Optional

import numpy as np

from ..market_data.snapshot import MarketSnapshot
from .errors import HorizonMismatchError
from .leverage import calibrate_leverage
from .models import TIME_TOLERANCE, McConfig, ModelSpec, PathSet, PriceResult
from .paths import simulate_paths

if TYPE_CHECKING:
    from ..governance.store import InventoryStore
    from ..products.base import Product

logger = logging.getLogger(__name__)


def prepare_model(model: ModelSpec, market: MarketSnapshot, horizon: float, config: McConfig) -> ModelSpec:
    """
    Attach a leverage surface to an HWLV spec that has none.

    LV specs are returned unchanged. A supplied leverage is never replaced;
    it must cover ``horizon``.

    Raises:
        HorizonMismatchError: Supplied leverage ends before ``horizon``
    """
    if not model.is_hybrid:
        return model
    if model.leverage is not None:
        if model.leverage.horizon + TIME_TOLERANCE < horizon:
            raise HorizonMismatchError(
                f"leverage calibrated to {model.leverage.horizon}y, product needs {horizon}y"
            )
        return model
    leverage = calibrate_leverage(
        market,
        model.hw,
        model.equity_rate_correlation,
        config,
        horizon=horizon,
        mode=model.leverage_mode,
    )
    return model.with_leverage(leverage)


def discounted_cashflows(product: "Product", paths: PathSet, reference: float) -> np.ndarray:
    """Per-path present value of the product's cashflows per unit notional."""
    pv = np.zeros(paths.n_paths)
    for t, amounts in product.cashflows(paths, reference):
        pv = pv + amounts * paths.discount(t)
    return pv / product.notional


def price_pathwise(
    product: "Product",
    model: ModelSpec,
    market: MarketSnapshot,
    config: McConfig,
) -> np.ndarray:
    """
    Discounted value of every path per unit notional.

    Differences of two such arrays computed with the same config are common
    random number differences; their sample std gives the difference's error.

    Raises:
        ConfigurationError: Product dates that cannot be simulated
        HorizonMismatchError: Product dates beyond the leverage horizon
    """
    reference = product.reference if product.reference is not None else market.spot
    model = prepare_model(model, market, product.horizon, config)
    paths = simulate_paths(model, market, product.horizon, config, event_times=product.event_times)
    return discounted_cashflows(product, paths, reference)


def standard_error(values: np.ndarray, antithetic: bool) -> float:
    """
    Sample std over sqrt(n) of independent samples.

    Antithetic pairs are averaged first, since the two halves of a pair are
    not independent.
    """
    values = np.asarray(values, dtype=float)
    if antithetic and len(values) >= 4:
        paired = values[: len(values) - len(values) % 2].reshape(-1, 2).mean(axis=1)
        return float(paired.std(ddof=1) / math.sqrt(len(paired)))
    if len(values) < 2:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(len(values)))


def price(
    product: "Product",
    model: ModelSpec,
    market: MarketSnapshot,
    config: McConfig,
    store: Optional["InventoryStore"] = None,
    override: bool = False,
) -> PriceResult:
    """
    Price a product under LV or HWLV.

    When a governance store is given the product-model mapping is checked
    first; a blocked mapping raises unless ``override`` is set, in which case
    the override is audit-logged and flagged on the result.

    Args:
        product: Any payoff from the products package
        model: LV or HWLV spec (HWLV leverage is calibrated when absent)
        market: Market snapshot
        config: Monte Carlo settings
        store: Optional inventory store consulted before pricing
        override: Proceed through a blocked mapping

    Returns:
        PriceResult per unit notional

    Raises:
        GovernanceBlockError: Blocked mapping without override
        HorizonMismatchError: Product dates beyond the simulated horizon
    """
    overridden = False
    if store is not None:
        from ..governance.controls import enforce_mapping

        overridden = enforce_mapping(store, product.family, model.identifier, override)

    values = price_pathwise(product, model, market, config)
    result = PriceResult(
        value=float(values.mean()),
        std_error=standard_error(values, config.antithetic),
        n_paths=len(values),
        model_id=model.identifier,
        governance_override=overridden,
    )
    logger.info(
        f"Priced {product.family} under {model.identifier}: {result.value:.6f} "
        f"(se {result.std_error:.2e}, {result.n_paths} paths)"
    )
    return result
