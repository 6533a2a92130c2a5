"""
FVA computation methods.

Every method revalues with the same Monte Carlo config, so differences are
common random number differences. Prices are per unit notional. Adverse
direction follows the position: a long desk loses when the price falls, a
short desk when it rises.

A ``pricer`` callable can replace the Monte Carlo pricer; it maps
(model, market) to per-path values, and is how synthetic pricers are used.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..engine.errors import ConfigurationError
from ..engine.models import McConfig, ModelSpec
from ..engine.pricer import prepare_model, price_pathwise, standard_error
from ..market_data.snapshot import MarketSnapshot
from ..products.base import Product
from .errors import InsufficientSamplesError
from .params import ParameterSample, apply_parameter, marked_value, resolve_parameter
from .report import FvaComponent, FvaMethod

logger = logging.getLogger(__name__)

Pricer = Callable[[ModelSpec, MarketSnapshot], np.ndarray]
Variant = Union[MarketSnapshot, Dict[str, float], Tuple[str, ModelSpec, MarketSnapshot]]


class Position(str, Enum):
    LONG = "long"
    SHORT = "short"

    @property
    def sign(self) -> float:
        return 1.0 if self is Position.LONG else -1.0


def make_pricer(product: Product, config: McConfig) -> Pricer:
    """Monte Carlo pricer with the fixing pinned at the first market seen."""
    pinned: Dict[str, Product] = {}

    def pricer(model: ModelSpec, market: MarketSnapshot) -> np.ndarray:
        if "product" not in pinned:
            ref = product.reference if product.reference is not None else market.spot
            pinned["product"] = product.with_reference(ref)
        return price_pathwise(pinned["product"], model, market, config)

    return pricer


@dataclass
class _Valuation:
    """Per-path values of one revaluation."""

    values: np.ndarray
    antithetic: bool

    @property
    def price(self) -> float:
        return float(np.mean(self.values))

    def diff_error(self, other: "_Valuation") -> float:
        """Std error of (self - other) under common random numbers."""
        return standard_error(self.values - other.values, self.antithetic)


def _adverse(position: Position, base: float, moved: float) -> float:
    """Loss to the desk when the price moves from base to moved (may be negative)."""
    return position.sign * (base - moved)


def _valuate(pricer: Pricer, model: ModelSpec, market: MarketSnapshot, antithetic: bool) -> _Valuation:
    return _Valuation(np.asarray(pricer(model, market), dtype=float), antithetic)


# ============== Parameter methods ==============

def fva_parameter_range(
    product: Product,
    model: ModelSpec,
    market: MarketSnapshot,
    param: ParameterSample,
    config: McConfig,
    p_lo: float = 0.05,
    p_hi: float = 0.95,
    position: Position = Position.LONG,
    pricer: Optional[Pricer] = None,
) -> FvaComponent:
    """
    Adverse price move with the parameter at its historical quantiles.

    The base price uses the marked parameter value; each quantile is a
    revaluation. amount = max(0, adverse move at q_lo, adverse move at q_hi).
    A collapsed sample (all values equal) carries no range and gives 0.

    Raises:
        UnknownParameterError: Parameter not bumpable under this model
        InsufficientSamplesError: Fewer than 2 samples
        ValueError: Percentiles outside 0 <= p_lo < p_hi <= 1
    """
    if not 0.0 <= p_lo < p_hi <= 1.0:
        raise ValueError(f"percentiles must satisfy 0 <= p_lo < p_hi <= 1, got {p_lo}, {p_hi}")
    resolve_parameter(param.name, model)
    position = Position(position)
    pricer = pricer or make_pricer(product, config)

    q_lo, q_hi = param.quantiles(p_lo, p_hi)
    mark = marked_value(param.name, model, market, product.horizon)
    base = _valuate(pricer, model, market, config.antithetic)
    lo = _valuate(pricer, *apply_parameter(param.name, model, market, q_lo), config.antithetic)
    hi = _valuate(pricer, *apply_parameter(param.name, model, market, q_hi), config.antithetic)

    adverse_lo = _adverse(position, base.price, lo.price)
    adverse_hi = _adverse(position, base.price, hi.price)
    worst_q, worst_val = (q_lo, lo) if adverse_lo >= adverse_hi else (q_hi, hi)
    amount = max(0.0, adverse_lo, adverse_hi)
    std_error = worst_val.diff_error(base)
    if param.collapsed:
        # no historical uncertainty, whatever the distance to the mark
        amount, std_error = 0.0, 0.0

    logger.info(f"parameter_range {param.name}: q=({q_lo:.6g}, {q_hi:.6g}) amount {amount * 1e4:.4f} bp")
    return FvaComponent(
        method=FvaMethod.PARAMETER_RANGE,
        amount=amount,
        parameter=param.name,
        conservative_value=worst_q,
        std_error=std_error,
        diagnostics={
            "position": position.value,
            "marked_value": mark,
            "collapsed": param.collapsed,
            "p_lo": p_lo,
            "p_hi": p_hi,
            "q_lo": q_lo,
            "q_hi": q_hi,
            "base_price": base.price,
            "price_q_lo": lo.price,
            "price_q_hi": hi.price,
            "n_samples": len(param.samples),
        },
    )


def fva_sensitivity_multiple(
    product: Product,
    model: ModelSpec,
    market: MarketSnapshot,
    param_name: str,
    multiple: float,
    config: McConfig,
    bump: Optional[float] = None,
    unit_move: Optional[float] = None,
    position: Position = Position.LONG,
    pricer: Optional[Pricer] = None,
) -> FvaComponent:
    """
    amount = multiple x |dP/dparam| x unit_move.

    The sensitivity is a central difference of +-bump around the marked
    value; ``unit_move`` defaults to the bump.
    """
    if multiple < 0.0:
        raise ValueError(f"multiple must be >= 0, got {multiple}")
    spec = resolve_parameter(param_name, model)
    bump = spec.default_bump if bump is None else bump
    if bump <= 0.0:
        raise ValueError(f"bump must be > 0, got {bump}")
    unit_move = bump if unit_move is None else unit_move
    position = Position(position)
    pricer = pricer or make_pricer(product, config)

    mark = marked_value(param_name, model, market, product.horizon)
    up = _valuate(pricer, *apply_parameter(param_name, model, market, mark + bump), config.antithetic)
    dn = _valuate(pricer, *apply_parameter(param_name, model, market, mark - bump), config.antithetic)
    sensitivity = (up.price - dn.price) / (2.0 * bump)
    sens_error = up.diff_error(dn) / (2.0 * bump)
    per_multiple = abs(sensitivity) * unit_move
    amount = multiple * per_multiple

    # the adverse move of size multiple x unit_move, for embedded booking
    direction = -math.copysign(1.0, sensitivity) * position.sign
    conservative = mark + direction * multiple * unit_move

    logger.info(f"sensitivity_multiple {param_name}: dP/dp={sensitivity:.6g} amount {amount * 1e4:.4f} bp")
    return FvaComponent(
        method=FvaMethod.SENSITIVITY_MULTIPLE,
        amount=amount,
        parameter=param_name,
        conservative_value=conservative,
        std_error=multiple * sens_error * unit_move,
        diagnostics={
            "position": position.value,
            "marked_value": mark,
            "sensitivity": sensitivity,
            "sensitivity_std_error": sens_error,
            "bump": bump,
            "unit_move": unit_move,
            "multiple": multiple,
            "price_up": up.price,
            "price_down": dn.price,
        },
    )


def fva_conservative_set(
    product: Product,
    model: ModelSpec,
    market: MarketSnapshot,
    param_name: str,
    values: Sequence[float],
    config: McConfig,
    position: Position = Position.LONG,
    pricer: Optional[Pricer] = None,
) -> FvaComponent:
    """Worst adverse move over a given conservative set of parameter values."""
    if not values:
        raise InsufficientSamplesError("conservative set needs at least one value")
    resolve_parameter(param_name, model)
    position = Position(position)
    pricer = pricer or make_pricer(product, config)

    base = _valuate(pricer, model, market, config.antithetic)
    moved = [_valuate(pricer, *apply_parameter(param_name, model, market, v), config.antithetic) for v in values]
    adverse = [_adverse(position, base.price, m.price) for m in moved]
    worst = int(np.argmax(adverse))
    amount = max(0.0, adverse[worst])

    return FvaComponent(
        method=FvaMethod.CONSERVATIVE_SET,
        amount=amount,
        parameter=param_name,
        conservative_value=float(values[worst]),
        std_error=moved[worst].diff_error(base),
        diagnostics={
            "position": position.value,
            "base_price": base.price,
            "values": [float(v) for v in values],
            "prices": [m.price for m in moved],
        },
    )


# ============== Calibration variation ==============

def _resolve_variant(variant: Variant, index: int, model: ModelSpec, market: MarketSnapshot) -> Tuple[str, ModelSpec, MarketSnapshot]:
    if isinstance(variant, MarketSnapshot):
        label = variant.label or f"variant_{index}"
        return label, model.without_leverage(), variant
    if isinstance(variant, dict):
        m, mk = model, market
        for name, value in variant.items():
            m, mk = apply_parameter(name, m, mk, value)
        label = ",".join(f"{k}={v}" for k, v in variant.items()) or f"variant_{index}"
        return label, m, mk
    label, m, mk = variant
    return label, m, mk


def fva_calibration_variation(
    product: Product,
    model: ModelSpec,
    variants: Sequence[Variant],
    config: McConfig,
    market: Optional[MarketSnapshot] = None,
    position: Position = Position.LONG,
    pricer: Optional[Pricer] = None,
) -> FvaComponent:
    """
    Spread of prices across calibration variants: max price - min price.

    A variant is another snapshot, a dict of parameter overrides applied to
    ``market``, or an explicit (label, model, market) triple.
    """
    if len(variants) < 2:
        raise InsufficientSamplesError(f"calibration variation needs at least 2 variants, got {len(variants)}")
    if market is None and any(not isinstance(v, MarketSnapshot) for v in variants if not isinstance(v, tuple)):
        raise ConfigurationError("parameter-set variants need a base market")
    position = Position(position)
    pricer = pricer or make_pricer(product, config)

    resolved = [_resolve_variant(v, i, model, market) for i, v in enumerate(variants)]
    valuations = [_valuate(pricer, m, mk, config.antithetic) for _, m, mk in resolved]
    prices = [v.price for v in valuations]
    hi, lo = int(np.argmax(prices)), int(np.argmin(prices))
    amount = prices[hi] - prices[lo]
    # the variant a desk of this side would book to be conservative
    adverse = lo if position is Position.LONG else hi

    logger.info(f"calibration_variation over {len(resolved)} variants: amount {amount * 1e4:.4f} bp")
    return FvaComponent(
        method=FvaMethod.CALIBRATION_VARIATION,
        amount=max(0.0, amount),
        conservative_value=resolved[adverse][0],
        std_error=valuations[hi].diff_error(valuations[lo]),
        diagnostics={
            "position": position.value,
            "variants": [label for label, _, _ in resolved],
            "prices": prices,
        },
    )


# ============== Model comparison ==============

@dataclass
class ComparisonGrid:
    """Signed P_alt - P_base per unit notional, rows tenors, columns correlations."""

    tenors: List[float]
    correlations: List[float]
    values: np.ndarray
    std_errors: np.ndarray
    warnings: Dict[float, str] = field(default_factory=dict)

    def to_frame(self, bp: bool = True) -> pd.DataFrame:
        scale = 1e4 if bp else 1.0
        frame = pd.DataFrame(
            self.values * scale,
            index=pd.Index(self.tenors, name="tenor"),
            columns=[repr(float(c)) for c in self.correlations],
        )
        frame.columns.name = "correlation"
        return frame


def _with_rho(model: ModelSpec, rho: float) -> ModelSpec:
    return model.with_correlation(rho) if model.is_hybrid else model


def fva_model_comparison(
    product: Product,
    market: MarketSnapshot,
    baseline: ModelSpec,
    alternative: ModelSpec,
    tenors: Sequence[float],
    correlations: Sequence[float],
    config: McConfig,
    position: Position = Position.LONG,
) -> Tuple[ComparisonGrid, FvaComponent]:
    """
    Price differences between two models across a tenor x correlation grid.

    Leverage is calibrated once per correlation, to the longest tenor, and
    reused across tenors. The component amount is the adverse difference at
    the snapshot's marked correlation and the product's own tenor.

    Raises:
        ConfigurationError: Tenors the product schedule cannot be rescaled to
    """
    position = Position(position)
    ref = product.reference if product.reference is not None else market.spot
    product = product.with_reference(ref)
    horizon = max(list(tenors) + [product.horizon])
    mark = market.equity_rate_correlation

    models: Dict[float, Tuple[ModelSpec, ModelSpec]] = {}

    def calibrated(rho: float) -> Tuple[ModelSpec, ModelSpec]:
        if rho not in models:
            models[rho] = (
                prepare_model(_with_rho(baseline, rho), market, horizon, config),
                prepare_model(_with_rho(alternative, rho), market, horizon, config),
            )
        return models[rho]

    def cell(p: Product, rho: float) -> Tuple[float, float, _Valuation, _Valuation]:
        base_model, alt_model = calibrated(rho)
        base = _Valuation(price_pathwise(p, base_model, market, config), config.antithetic)
        alt = _Valuation(price_pathwise(p, alt_model, market, config), config.antithetic)
        return alt.price - base.price, alt.diff_error(base), base, alt

    values = np.zeros((len(tenors), len(correlations)))
    errors = np.zeros_like(values)
    warnings: Dict[float, str] = {}
    for j, rho in enumerate(correlations):
        for i, tenor in enumerate(tenors):
            values[i, j], errors[i, j], _, _ = cell(product.rescale(tenor), rho)
            logger.info(f"Grid cell tenor={tenor} rho={rho}: {values[i, j] * 1e4:.4f} bp")
        alt_model = calibrated(rho)[1]
        if alt_model.leverage is not None and alt_model.leverage.warning:
            warnings[float(rho)] = alt_model.leverage.warning

    grid = ComparisonGrid(list(map(float, tenors)), list(map(float, correlations)), values, errors, warnings)

    diff, diff_error, base, alt = cell(product, mark)
    amount = max(0.0, _adverse(position, base.price, alt.price))
    component = FvaComponent(
        method=FvaMethod.MODEL_COMPARISON,
        amount=amount,
        std_error=diff_error,
        diagnostics={
            "position": position.value,
            "baseline": baseline.identifier,
            "alternative": alternative.identifier,
            "marked_correlation": mark,
            "tenor": product.horizon,
            "baseline_price": base.price,
            "alternative_price": alt.price,
            "difference": diff,
            "grid_bp": grid.to_frame().to_dict(orient="index"),
            "calibration_warnings": {repr(k): v for k, v in warnings.items()},
        },
    )
    return grid, component
