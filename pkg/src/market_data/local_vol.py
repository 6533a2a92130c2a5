"""
Dupire local volatility from the implied surface.

Finite differences on total variance w(T, y), y = ln(K / F(T)):

    sigma_loc^2 = dw/dT / (1 - y/w dw/dy + 1/4 (-1/4 - 1/w + y^2/w^2) (dw/dy)^2 + 1/2 d2w/dy2)
"""

from typing import Union

import numpy as np

from .curves import DiscountCurve, EquityForwardInputs, forward_price
from .errors import DomainError
from .surface import ImpliedVolSurface

ArrayLike = Union[float, np.ndarray]

MIN_LOCAL_VOL = 1e-3
MAX_LOCAL_VOL = 5.0
MAX_TIME_STEP = 0.05
LOG_MONEYNESS_STEP = 0.01


def local_vol_from_moneyness(surface: ImpliedVolSurface, t: float, moneyness: ArrayLike) -> ArrayLike:
    """
    Dupire local vol at time t for strike/forward ratios ``moneyness``.

    The time step is min(0.05y, half the expiry cell containing t); central
    differences are used when t - dT stays positive, forward ones otherwise.
    Where the surface admits arbitrage the implied vol is used instead, and
    the result is clipped to [MIN_LOCAL_VOL, MAX_LOCAL_VOL].
    """
    if t <= 0.0:
        raise DomainError(f"local vol requires t > 0, got {t}")
    k = np.asarray(moneyness, dtype=float)
    if np.any(k <= 0.0):
        raise DomainError("local vol requires moneyness > 0")

    y = np.log(k)
    dt = min(MAX_TIME_STEP, 0.5 * surface.expiry_cell_width(t))
    dy = LOG_MONEYNESS_STEP

    def w(tt: float, yy: np.ndarray) -> np.ndarray:
        return np.asarray(surface.total_variance(tt, np.exp(yy)), dtype=float)

    w0 = w(t, y)
    if t - dt > 0.0:
        dw_dt = (w(t + dt, y) - w(t - dt, y)) / (2.0 * dt)
    else:
        dw_dt = (w(t + dt, y) - w0) / dt

    w_up = w(t, y + dy)
    w_dn = w(t, y - dy)
    dw_dy = (w_up - w_dn) / (2.0 * dy)
    d2w_dy2 = (w_up - 2.0 * w0 + w_dn) / (dy * dy)

    with np.errstate(divide="ignore", invalid="ignore"):
        denom = (
            1.0
            - (y / w0) * dw_dy
            + 0.25 * (-0.25 - 1.0 / w0 + (y * y) / (w0 * w0)) * dw_dy * dw_dy
            + 0.5 * d2w_dy2
        )
        local_var = dw_dt / denom

    # arbitrage in the interpolated surface: the implied vol stands in there
    bad = ~np.isfinite(local_var) | (denom <= 0.0) | (dw_dt <= 0.0)
    implied = np.broadcast_to(np.asarray(surface.implied_vol(t, k), dtype=float), np.shape(local_var))
    local_var = np.where(bad, implied * implied, local_var)
    vol = np.clip(np.sqrt(np.maximum(local_var, 0.0)), MIN_LOCAL_VOL, MAX_LOCAL_VOL)
    return float(vol) if np.ndim(vol) == 0 else vol


def dupire_local_vol(
    surface: ImpliedVolSurface,
    eq: EquityForwardInputs,
    discount: DiscountCurve,
    t: float,
    spot_level: ArrayLike,
) -> ArrayLike:
    """
    Dupire local volatility at time t and spot level(s).

    Raises:
        DomainError: If t <= 0 or spot_level <= 0
    """
    s = np.asarray(spot_level, dtype=float)
    if t <= 0.0 or np.any(s <= 0.0):
        raise DomainError(f"dupire_local_vol requires t > 0 and spot > 0, got t={t}")
    result = local_vol_from_moneyness(surface, t, s / forward_price(eq, discount, t))
    return result
