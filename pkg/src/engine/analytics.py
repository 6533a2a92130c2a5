"""Black-Scholes closed forms (flat vol, continuous rate and carry)."""

import math

import numpy as np
from scipy.stats import norm


def _d1_d2(spot: float, strike: float, expiry: float, rate: float, carry: float, vol: float):
    sd = vol * math.sqrt(expiry)
    d1 = (math.log(spot / strike) + (rate - carry + 0.5 * vol * vol) * expiry) / sd
    return d1, d1 - sd


def bs_price(spot: float, strike: float, expiry: float, rate: float, carry: float, vol: float, is_call: bool) -> float:
    """Vanilla option price."""
    d1, d2 = _d1_d2(spot, strike, expiry, rate, carry, vol)
    df_r = math.exp(-rate * expiry)
    df_q = math.exp(-carry * expiry)
    if is_call:
        return spot * df_q * norm.cdf(d1) - strike * df_r * norm.cdf(d2)
    return strike * df_r * norm.cdf(-d2) - spot * df_q * norm.cdf(-d1)


def bs_delta(spot: float, strike: float, expiry: float, rate: float, carry: float, vol: float, is_call: bool) -> float:
    """dPrice/dSpot."""
    d1, _ = _d1_d2(spot, strike, expiry, rate, carry, vol)
    df_q = math.exp(-carry * expiry)
    return df_q * norm.cdf(d1) if is_call else -df_q * norm.cdf(-d1)


def bs_vega(spot: float, strike: float, expiry: float, rate: float, carry: float, vol: float) -> float:
    """dPrice/dVol per unit of vol (not per vol point)."""
    d1, _ = _d1_d2(spot, strike, expiry, rate, carry, vol)
    return spot * math.exp(-carry * expiry) * norm.pdf(d1) * math.sqrt(expiry)


def digital_price(
    spot: float, strike: float, expiry: float, rate: float, carry: float, vol: float, is_call: bool, payout: float = 1.0
) -> float:
    """Cash-or-nothing digital paying ``payout``."""
    _, d2 = _d1_d2(spot, strike, expiry, rate, carry, vol)
    prob = norm.cdf(d2) if is_call else norm.cdf(-d2)
    return payout * math.exp(-rate * expiry) * prob


def black_call(forward, strike, expiry: float, vol):
    """Undiscounted Black call on the forward; vectorised over strike and vol."""
    forward = np.asarray(forward, dtype=float)
    strike = np.asarray(strike, dtype=float)
    sd = np.asarray(vol, dtype=float) * math.sqrt(expiry)
    d1 = np.log(forward / strike) / sd + 0.5 * sd
    return forward * norm.cdf(d1) - strike * norm.cdf(d1 - sd)
