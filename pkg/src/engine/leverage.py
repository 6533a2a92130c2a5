"""
Local-vol grids and HWLV leverage calibration.

Both LV and HWLV diffuse on the same fixed pillars (monthly in time, a
geometric ladder in moneyness vs forward), so the two models share
interpolation exactly.

With stochastic rates the local variance seen by vanillas picks up a rate
term:

    sigma_dup^2 = L^2 + 2 E[D_T (r_T - f(0,T)) 1{OTM}] / (K d2C/dK2)

The expectation is estimated from simulated particles binned between the
moneyness pillars, on the out-of-the-money side of the strike. Writing the
conditional factor as sigma_dup^2 / (sigma_dup^2 - adjustment), the update is
L = sigma_dup / sqrt(factor), repeated until L stops moving.
"""

import logging
import math
from typing import Optional, Tuple, Union

import numpy as np

from ..market_data.curves import forward_price
from ..market_data.local_vol import local_vol_from_moneyness
from ..market_data.snapshot import MarketSnapshot
from .analytics import black_call
from .hull_white import HullWhiteParams
from .models import (
    LEVERAGE_CAP,
    LEVERAGE_FLOOR,
    TIME_TOLERANCE,
    LeverageMode,
    LeverageSurface,
    McConfig,
    ModelKind,
    ModelSpec,
    PathSet,
    VolGrid,
)
from .paths import simulate_paths

logger = logging.getLogger(__name__)

PILLARS_PER_YEAR = 12
MONEYNESS_PILLARS: Tuple[float, ...] = tuple(float(k) for k in np.geomspace(0.2, 5.0, 57))
MIN_PILLAR_TIME = 1.0 / 48.0

MAX_SWEEPS = 5
MIN_CELL_PATHS = 50
CONVERGENCE_TOL = 1e-3
STRIKE_STEP = 0.01
DENSITY_FRACTION = 1e-3
FACTOR_MIN = 0.25
FACTOR_MAX = 4.0


def pillar_times(horizon: float) -> Tuple[float, ...]:
    """Monthly pillars from 0, one past the first pillar covering ``horizon``."""
    n = int(math.ceil(horizon * PILLARS_PER_YEAR - TIME_TOLERANCE)) + 1
    return tuple(j / PILLARS_PER_YEAR for j in range(n + 1))


def local_vol_surface(market: MarketSnapshot, horizon: float) -> VolGrid:
    """Dupire local vol of the market surface on the shared pillar grid."""
    times = pillar_times(horizon)
    k = np.array(MONEYNESS_PILLARS)
    rows = [local_vol_from_moneyness(market.surface, max(t, MIN_PILLAR_TIME), k) for t in times]
    return VolGrid(times, MONEYNESS_PILLARS, np.vstack(rows))


def _strike_density(market: MarketSnapshot, t: float) -> np.ndarray:
    """K d2C/dK2 per unit forward, on the moneyness pillars (discounted)."""
    k = np.array(MONEYNESS_PILLARS)
    h = STRIKE_STEP
    strikes = np.concatenate((k * (1.0 - h), k, k * (1.0 + h)))
    vols = np.asarray(market.surface.implied_vol(t, strikes))
    calls = black_call(1.0, strikes, t, vols).reshape(3, -1)
    second = (calls[2] - 2.0 * calls[1] + calls[0]) / (k * h) ** 2
    return float(market.discount.discount_factor(t)) * k * second


def _rate_adjustment(paths: PathSet, t: float, forward: float, density: np.ndarray) -> np.ndarray:
    """
    Local-variance adjustment 2 E[D (r - f) 1{OTM}] / (K d2C/dK2) per pillar.

    Particles are binned between consecutive moneyness pillars; the
    out-of-the-money expectation at a pillar is the sum of the bins beyond it
    (calls above the forward, puts below). Pillars whose tail holds fewer
    than MIN_CELL_PATHS particles, or whose market density is negligible,
    are merged with their inner neighbour.
    """
    col = paths.index(t)
    k = np.array(MONEYNESS_PILLARS)
    moneyness = paths.spot[:, col] / forward
    f0t = float(paths.curve.instantaneous_forward(t))
    weight = paths.discount(t) * (paths.short_rate[:, col] - f0t)
    n = len(moneyness)

    # bin i holds k[i-1] < m <= k[i]; the last bin lies above every pillar
    bins = np.searchsorted(k, moneyness, side="left")
    counts = np.bincount(bins, minlength=len(k) + 1)
    sums = np.bincount(bins, weights=weight, minlength=len(k) + 1)
    n_below = np.cumsum(counts)[:-1]
    below = np.cumsum(sums)[:-1]
    above = sums.sum() - below

    call_side = k >= 1.0
    # E[D (r - f)] vanishes for a curve-fitted model, so the put side is minus the lower tail
    expectation = np.where(call_side, above, -below) / n
    tail_count = np.where(call_side, n - n_below, n_below)

    valid = (tail_count >= MIN_CELL_PATHS) & (density > DENSITY_FRACTION * float(np.max(density)))
    adjustment = np.zeros_like(k)
    adjustment[valid] = 2.0 * expectation[valid] / density[valid]

    atm = int(np.argmin(np.abs(k - 1.0)))
    if not valid[atm]:
        adjustment[atm] = 0.0
    for i in range(atm + 1, len(k)):
        if not valid[i]:
            adjustment[i] = adjustment[i - 1]
    for i in range(atm - 1, -1, -1):
        if not valid[i]:
            adjustment[i] = adjustment[i + 1]
    return adjustment


def conditional_factor(dupire_var: np.ndarray, adjustment: np.ndarray) -> np.ndarray:
    """
    sigma_dup^2 / (sigma_dup^2 - adjustment), bounded to [FACTOR_MIN, FACTOR_MAX].

    A non-positive denominator takes the upper bound.
    """
    reduced = dupire_var - adjustment
    safe = np.where(reduced > 0.0, reduced, 1.0)
    factor = np.where(reduced > 0.0, dupire_var / safe, FACTOR_MAX)
    return np.clip(factor, FACTOR_MIN, FACTOR_MAX)


def calibrate_leverage(
    market: MarketSnapshot,
    hw: HullWhiteParams,
    correlation: float,
    config: McConfig,
    horizon: float = 5.0,
    mode: Union[str, LeverageMode] = LeverageMode.RECALIBRATED,
) -> LeverageSurface:
    """
    Leverage so that HWLV reprices the market vanillas.

    Each sweep simulates HWLV with the current leverage and sets
    leverage = dupire / sqrt(conditional factor), clamped to [0.01, 10].

    Args:
        market: Snapshot whose implied surface is the calibration target
        hw: Hull-White parameters of the rate leg
        correlation: Equity-rate correlation
        config: Monte Carlo settings of the calibration particles
        horizon: Longest maturity the leverage must cover
        mode: ``reuse`` takes the Dupire grid as is

    Returns:
        LeverageSurface; ``warning`` is set when the fixed point did not
        settle within MAX_SWEEPS sweeps
    """
    dupire = local_vol_surface(market, horizon)

    if LeverageMode(mode) is LeverageMode.REUSE or hw.rate_vol == 0.0:
        reason = "reuse mode" if LeverageMode(mode) is LeverageMode.REUSE else "zero rate vol"
        logger.info(f"Leverage set to the Dupire grid ({reason}), horizon {dupire.horizon:.4f}y")
        return LeverageSurface(dupire.times, dupire.moneyness, dupire.values)

    times = np.array(dupire.times)
    event_times = tuple(float(t) for t in times[1:])
    forwards = np.asarray(forward_price(market.equity, market.discount, times))
    densities = [None] + [_strike_density(market, float(t)) for t in times[1:]]
    dupire_var = dupire.values ** 2

    leverage = np.clip(dupire.values, LEVERAGE_FLOOR, LEVERAGE_CAP)
    change = math.inf
    sweep = 0
    for sweep in range(1, MAX_SWEEPS + 1):
        model = ModelSpec(
            kind=ModelKind.HWLV,
            hw=hw,
            equity_rate_correlation=correlation,
            leverage=LeverageSurface(dupire.times, dupire.moneyness, leverage),
        )
        paths = simulate_paths(model, market, float(times[-1]), config, event_times=event_times)

        adjustment = np.zeros_like(dupire_var)
        for j in range(1, len(times)):
            adjustment[j] = _rate_adjustment(paths, float(times[j]), float(forwards[j]), densities[j])

        factor = conditional_factor(dupire_var, adjustment)
        updated = np.clip(dupire.values / np.sqrt(factor), LEVERAGE_FLOOR, LEVERAGE_CAP)
        change = float(np.max(np.abs(updated - leverage)))
        leverage = updated
        logger.debug(f"Leverage sweep {sweep}: max change {change:.3e}")
        if change < CONVERGENCE_TOL:
            break

    warning: Optional[str] = None
    if change >= CONVERGENCE_TOL:
        warning = f"leverage did not converge after {MAX_SWEEPS} sweeps (max change {change:.3e})"
        logger.warning(warning)

    logger.info(
        f"Calibrated leverage: rho={correlation}, a={hw.mean_reversion}, sigma_r={hw.rate_vol}, "
        f"{sweep} sweeps, horizon {dupire.horizon:.4f}y"
    )
    return LeverageSurface(dupire.times, dupire.moneyness, leverage, warning=warning, sweeps=sweep)
