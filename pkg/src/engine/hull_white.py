"""
One-factor Hull-White short rate fitted to the initial discount curve.

r(t) = x(t) + phi(t), dx = -a x dt + sigma dW, x(0) = 0,
phi(t) = f(0, t) + sigma^2 / (2 a^2) (1 - exp(-a t))^2.
"""

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from ..market_data.curves import DiscountCurve
from ..market_data.errors import DomainError
from .errors import ConfigurationError

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class HullWhiteParams:
    """Mean reversion a (1/years) and absolute short-rate vol sigma."""

    mean_reversion: float
    rate_vol: float

    def __post_init__(self) -> None:
        if not self.mean_reversion > 0.0:
            raise ConfigurationError(f"mean_reversion must be > 0, got {self.mean_reversion}")
        if not self.rate_vol >= 0.0:
            raise ConfigurationError(f"rate_vol must be >= 0, got {self.rate_vol}")

    def b_factor(self, t: ArrayLike, maturity: ArrayLike) -> ArrayLike:
        """B(t, T) = (1 - exp(-a (T - t))) / a."""
        a = self.mean_reversion
        return (1.0 - np.exp(-a * (np.asarray(maturity) - np.asarray(t)))) / a

    def phi(self, curve: DiscountCurve, t: ArrayLike) -> ArrayLike:
        """Deterministic shift fitting the model to the curve."""
        a, s = self.mean_reversion, self.rate_vol
        t_arr = np.asarray(t, dtype=float)
        out = curve.instantaneous_forward(t_arr) + s * s / (2.0 * a * a) * (1.0 - np.exp(-a * t_arr)) ** 2
        return float(out) if np.ndim(out) == 0 else out

    def phi_convexity_integral(self, t0: np.ndarray, t1: np.ndarray) -> np.ndarray:
        """Integral of the convexity part of phi over [t0, t1]."""
        a, s = self.mean_reversion, self.rate_vol
        if s == 0.0:
            return np.zeros_like(np.asarray(t0, dtype=float))
        e0, e1 = np.exp(-a * t0), np.exp(-a * t1)
        inner = (t1 - t0) + (2.0 / a) * (e1 - e0) - (1.0 / (2.0 * a)) * (e1 * e1 - e0 * e0)
        return s * s / (2.0 * a * a) * inner

    def ou_step(self, dt: float):
        """Exact OU update coefficients (decay, conditional std) for step dt."""
        a, s = self.mean_reversion, self.rate_vol
        decay = math.exp(-a * dt)
        std = s * math.sqrt((1.0 - math.exp(-2.0 * a * dt)) / (2.0 * a))
        return decay, std


def hw_discount_bond(
    params: HullWhiteParams,
    curve: DiscountCurve,
    t: float,
    maturity: float,
    r_t: ArrayLike,
) -> ArrayLike:
    """
    Zero-coupon bond P(t, T) given the short rate r(t).

    P(t,T) = P(0,T)/P(0,t) * exp(B f(0,t) - sigma^2/(4a) (1 - e^{-2at}) B^2 - B r_t)

    Raises:
        DomainError: If t < 0 or t > T
    """
    if t < 0.0 or t > maturity:
        raise DomainError(f"hw_discount_bond requires 0 <= t <= T, got t={t}, T={maturity}")
    if t == maturity:
        return 1.0 if np.ndim(r_t) == 0 else np.ones_like(np.asarray(r_t, dtype=float))

    a, s = params.mean_reversion, params.rate_vol
    b = float(params.b_factor(t, maturity))
    ratio = curve.discount_factor(maturity) / curve.discount_factor(t)
    f0t = curve.instantaneous_forward(t)
    r = np.asarray(r_t, dtype=float)
    exponent = b * f0t - s * s / (4.0 * a) * (1.0 - math.exp(-2.0 * a * t)) * b * b - b * r
    out = ratio * np.exp(exponent)
    return float(out) if np.ndim(out) == 0 else out
