"""
Delta/gamma payoff softening.

The softened payoff is the smallest profile above the original whose slope
stays within +-max_delta and whose slope increases by at most max_gamma per
unit of return. Jumps turn into ramps of width jump / max_delta on the side
that keeps the new payoff above the old one, convex kinks into parabolic
blends of curvature max_gamma.

Steps on a fine return grid:
  1. Lipschitz upper envelope: h(x) = max_y f(y) - M |x - y|
  2. curvature envelope: g = G x^2/2 + concave hull of (h - G x^2/2)
Both steps are repeated until the result satisfies both bounds.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..engine.errors import ConfigurationError
from .profile import PayoffProfile

logger = logging.getLogger(__name__)

GRID_STEP = 1e-4
MIN_GRID_END = 4.0
KNOT_TOLERANCE = 1e-9
MAX_ROUNDS = 4
BOUND_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SofteningPolicy:
    """Slope and slope-change bounds; infinity leaves a bound off. Always super-replicating."""

    max_delta: float = math.inf
    max_gamma: float = math.inf

    def __post_init__(self) -> None:
        for name in ("max_delta", "max_gamma"):
            value = getattr(self, name)
            value = math.inf if value is None else float(value)
            if not value > 0.0:
                raise ConfigurationError(f"{name} must be > 0 or unbounded, got {value}")
            object.__setattr__(self, name, value)

    @property
    def is_unbounded(self) -> bool:
        return math.isinf(self.max_delta) and math.isinf(self.max_gamma)

    def to_dict(self) -> dict:
        return {
            "max_delta": None if math.isinf(self.max_delta) else self.max_delta,
            "max_gamma": None if math.isinf(self.max_gamma) else self.max_gamma,
        }


def _grid(payoff: PayoffProfile) -> np.ndarray:
    knots = payoff.knots
    end = MIN_GRID_END if knots[-1] <= MIN_GRID_END else 2.0 * knots[-1]
    base = np.linspace(0.0, end, int(round(end / GRID_STEP)) + 1)
    inside = knots[(knots >= 0.0) & (knots <= end)]
    if len(inside) == 0:
        return base
    pos = np.searchsorted(inside, base)
    lo = inside[np.clip(pos - 1, 0, len(inside) - 1)]
    hi = inside[np.clip(pos, 0, len(inside) - 1)]
    near = np.minimum(np.abs(base - lo), np.abs(base - hi)) <= KNOT_TOLERANCE
    return np.union1d(base[~near], inside)


def _lipschitz_envelope(x: np.ndarray, y: np.ndarray, slope: float) -> np.ndarray:
    """Smallest function above y with |slope| <= ``slope``."""
    forward = np.maximum.accumulate(y + slope * x) - slope * x
    backward = np.maximum.accumulate((y - slope * x)[::-1])[::-1] + slope * x
    return np.maximum(np.maximum(forward, backward), y)


def _upper_hull(x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Concave majorant of the points (x, u) evaluated on x."""
    hull = []
    for i in range(len(x)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b when it lies on or below the chord a -> i
            cross = (x[b] - x[a]) * (u[i] - u[a]) - (u[b] - u[a]) * (x[i] - x[a])
            if cross >= 0.0:
                hull.pop()
            else:
                break
        hull.append(i)
    idx = np.array(hull)
    return np.interp(x, x[idx], u[idx])


def _curvature_envelope(x: np.ndarray, y: np.ndarray, gamma: float) -> np.ndarray:
    """Smallest function above y whose slope increases at most ``gamma`` per unit."""
    q = 0.5 * gamma * x * x
    return np.maximum(q + _upper_hull(x, y - q), y)


def _within_bounds(x: np.ndarray, y: np.ndarray, policy: SofteningPolicy) -> bool:
    slopes = np.diff(y) / np.diff(x)
    if not math.isinf(policy.max_delta) and np.max(np.abs(slopes)) > policy.max_delta + BOUND_TOLERANCE:
        return False
    if not math.isinf(policy.max_gamma) and len(slopes) > 1:
        mids = 0.5 * (x[2:] - x[:-2])
        if np.max(np.diff(slopes) / mids) > policy.max_gamma * (1.0 + 1e-6) + BOUND_TOLERANCE:
            return False
    return True


def soften(payoff: PayoffProfile, policy: SofteningPolicy) -> PayoffProfile:
    """
    Softened payoff that dominates ``payoff`` everywhere.

    The result keeps the original as its floor, so the pathwise payoff is
    never below the original one; an unbounded policy returns the input.
    """
    if policy.is_unbounded:
        return payoff

    x = _grid(payoff)
    y = np.maximum(np.asarray(payoff(x)), np.asarray(payoff.left_limit(x)))
    h = y
    for _ in range(MAX_ROUNDS):
        if not math.isinf(policy.max_delta):
            h = _lipschitz_envelope(x, h, policy.max_delta)
        if not math.isinf(policy.max_gamma):
            h = _curvature_envelope(x, h, policy.max_gamma)
        if _within_bounds(x, h, policy):
            break
    else:
        logger.warning(f"Softened payoff still breaks {policy.to_dict()} after {MAX_ROUNDS} rounds")

    m = policy.max_delta
    left_slope = float(np.clip(payoff.left_slope, -m, m))
    right_slope = float(np.clip(payoff.right_slope, -m, m))
    return PayoffProfile(x, h, h, left_slope=left_slope, right_slope=right_slope, floor=payoff)


def soften_product(product, policy: SofteningPolicy):
    """
    Terminal product paying the softened profile of ``product``.

    Autocallables take the policy on their maturity profile instead.
    """
    from .payoffs import Autocallable, TerminalPayoff

    if isinstance(product, Autocallable):
        return product.with_softening(policy)
    profile = product.terminal_profile()
    return TerminalPayoff(
        profile=soften(profile, policy),
        expiry=product.expiry,
        notional=product.notional,
        family=product.family,
        reference=product.reference,
        forward_start=product.forward_start,
        label=f"softened {product.family}",
    )
