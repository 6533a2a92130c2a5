"""
Discount and carry curves.

Zero rates are continuously compounded. Interpolation is linear in z(t)*t
between pillars (log-linear in the discount factor), the segment before the
first pillar starts at (0, 0) and z is held flat beyond the last pillar.
"""

import math
from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np

from .errors import DomainError, InvariantViolationError

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class DiscountCurve:
    """Zero-rate curve; also used for carry (dividend net of repo) yields."""

    pillar_times: Tuple[float, ...]
    zero_rates: Tuple[float, ...]

    _times: np.ndarray = field(init=False, repr=False, compare=False)
    _zt: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        times = tuple(float(t) for t in self.pillar_times)
        rates = tuple(float(z) for z in self.zero_rates)
        object.__setattr__(self, "pillar_times", times)
        object.__setattr__(self, "zero_rates", rates)

        if len(times) == 0 or len(times) != len(rates):
            raise InvariantViolationError(
                "curve_shape", "pillar_times and zero_rates must be non-empty and equally long"
            )
        if not all(math.isfinite(t) and math.isfinite(z) for t, z in zip(times, rates)):
            raise InvariantViolationError("curve_finite", "pillars and rates must be finite")
        if times[0] <= 0.0:
            raise InvariantViolationError("pillar_times_positive", "all pillar times must be > 0")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvariantViolationError("pillar_times_increasing", "pillar times must be strictly increasing")

        t_arr = np.array(times)
        # node 0 is the origin so the first segment interpolates from z*t = 0
        object.__setattr__(self, "_times", np.concatenate(([0.0], t_arr)))
        object.__setattr__(self, "_zt", np.concatenate(([0.0], t_arr * np.array(rates))))

    @classmethod
    def flat(cls, rate: float, horizon: float = 30.0) -> "DiscountCurve":
        """Single-pillar curve with a constant zero rate."""
        return cls((horizon,), (rate,))

    def integrated_rate(self, t: ArrayLike) -> ArrayLike:
        """z(t)*t, the integral of the instantaneous forward from 0 to t."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0.0):
            raise DomainError(f"time must be >= 0, got {t}")
        last_t = self._times[-1]
        last_z = self.zero_rates[-1]
        inside = np.interp(t_arr, self._times, self._zt)
        out = np.where(t_arr > last_t, last_z * t_arr, inside)
        return float(out) if np.ndim(out) == 0 else out

    def discount_factor(self, t: ArrayLike) -> ArrayLike:
        """exp(-z(t)*t); exactly 1 at t = 0."""
        zt = self.integrated_rate(t)
        return math.exp(-zt) if isinstance(zt, float) else np.exp(-zt)

    def zero_rate(self, t: float) -> float:
        """Continuously compounded zero rate at t (first pillar rate at t = 0)."""
        if t < 0.0:
            raise DomainError(f"time must be >= 0, got {t}")
        if t == 0.0:
            return self.zero_rates[0]
        return self.integrated_rate(t) / t

    def instantaneous_forward(self, t: ArrayLike) -> ArrayLike:
        """Right-continuous instantaneous forward f(0, t) (slope of z*t)."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0.0):
            raise DomainError(f"time must be >= 0, got {t}")
        slopes = np.diff(self._zt) / np.diff(self._times)
        idx = np.searchsorted(self._times, t_arr, side="right") - 1
        out = np.where(
            idx >= len(slopes),
            self.zero_rates[-1],
            slopes[np.clip(idx, 0, len(slopes) - 1)],
        )
        return float(out) if np.ndim(out) == 0 else out

    def shifted(self, shift: float) -> "DiscountCurve":
        """Parallel shift of every zero rate."""
        return DiscountCurve(self.pillar_times, tuple(z + shift for z in self.zero_rates))


@dataclass(frozen=True)
class EquityForwardInputs:
    """Spot and continuous carry yield; forward = spot * exp(int r - int q)."""

    spot: float
    carry_curve: DiscountCurve

    def __post_init__(self) -> None:
        object.__setattr__(self, "spot", float(self.spot))
        if not (math.isfinite(self.spot) and self.spot > 0.0):
            raise InvariantViolationError("spot_positive", f"spot must be > 0, got {self.spot}")


def discount_factor(curve: DiscountCurve, t: float) -> float:
    """
    Discount factor for maturity t.

    Raises:
        DomainError: If t < 0
    """
    return curve.discount_factor(t)


def log_forward(eq: EquityForwardInputs, discount: DiscountCurve, t: ArrayLike) -> ArrayLike:
    """ln F(t) = ln S + z_r(t) t - z_q(t) t."""
    return math.log(eq.spot) + discount.integrated_rate(t) - eq.carry_curve.integrated_rate(t)


def forward_price(eq: EquityForwardInputs, discount: DiscountCurve, t: ArrayLike) -> ArrayLike:
    """
    Equity forward for delivery at t: spot grown at the funding rate net of carry.

    Raises:
        DomainError: If t < 0
    """
    growth = discount.integrated_rate(t) - eq.carry_curve.integrated_rate(t)
    if isinstance(growth, float):
        return eq.spot * math.exp(growth)
    return eq.spot * np.exp(growth)
