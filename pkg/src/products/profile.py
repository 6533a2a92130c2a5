"""
Piecewise-linear terminal payoff profiles.

A profile is a function of the terminal return R = S_T / S_ref, linear
between knots, possibly jumping at a knot (right-continuous) and extended
linearly beyond the first and last knot. It is the common currency of
terminal payoffs, softening and the hedging simulation.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..engine.errors import ConfigurationError

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class PayoffProfile:
    """
    Right-continuous piecewise-linear payoff in the terminal return.

    ``left_values[i]`` / ``right_values[i]`` are the limits at ``knots[i]``
    from the left and from the right; they differ only at jumps. An optional
    ``floor`` profile is evaluated alongside and the pointwise max returned.
    """

    knots: np.ndarray
    left_values: np.ndarray
    right_values: np.ndarray
    left_slope: float = 0.0
    right_slope: float = 0.0
    floor: Optional["PayoffProfile"] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        arrays = []
        for name in ("knots", "left_values", "right_values"):
            arr = np.array(getattr(self, name), dtype=float).ravel()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
            arrays.append(arr)
        knots = arrays[0]
        if len(knots) == 0 or any(len(a) != len(knots) for a in arrays):
            raise ConfigurationError("profile needs at least one knot and matching value arrays")
        if np.any(np.diff(knots) <= 0.0):
            raise ConfigurationError("profile knots must be strictly increasing")
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise ConfigurationError("profile knots and values must be finite")
        object.__setattr__(self, "left_slope", float(self.left_slope))
        object.__setattr__(self, "right_slope", float(self.right_slope))

    # ---- constructors ----

    @classmethod
    def constant(cls, value: float) -> "PayoffProfile":
        return cls([1.0], [value], [value])

    @classmethod
    def put(cls, strike: float) -> "PayoffProfile":
        """max(strike - R, 0)."""
        return cls([strike], [0.0], [0.0], left_slope=-1.0)

    @classmethod
    def call(cls, strike: float) -> "PayoffProfile":
        """max(R - strike, 0)."""
        return cls([strike], [0.0], [0.0], right_slope=1.0)

    @classmethod
    def digital_put(cls, strike: float, payout: float = 1.0) -> "PayoffProfile":
        """payout * 1{R < strike}; nothing is paid at the strike itself."""
        return cls([strike], [payout], [0.0])

    @classmethod
    def digital_call(cls, strike: float, payout: float = 1.0) -> "PayoffProfile":
        """payout * 1{R >= strike}."""
        return cls([strike], [0.0], [payout])

    @classmethod
    def forward(cls, strike: float) -> "PayoffProfile":
        """R - strike."""
        return cls([strike], [0.0], [0.0], left_slope=1.0, right_slope=1.0)

    @classmethod
    def combine(cls, terms: Sequence[Tuple[float, "PayoffProfile"]], constant: float = 0.0) -> "PayoffProfile":
        """Weighted sum of floor-free profiles plus a constant."""
        if not terms:
            return cls.constant(constant)
        if any(p.floor is not None for _, p in terms):
            raise ConfigurationError("only floor-free profiles can be combined")
        knots = np.unique(np.concatenate([p.knots for _, p in terms]))
        left = np.full(len(knots), constant)
        right = np.full(len(knots), constant)
        for w, p in terms:
            left = left + w * p.left_limit(knots)
            right = right + w * p(knots)
        return cls(
            knots,
            left,
            right,
            left_slope=sum(w * p.left_slope for w, p in terms),
            right_slope=sum(w * p.right_slope for w, p in terms),
        )

    # ---- evaluation ----

    def _evaluate(self, x: np.ndarray, side: str) -> np.ndarray:
        xs, lv, rv = self.knots, self.left_values, self.right_values
        n = len(xs)
        i = np.searchsorted(xs, x, side=side) - 1
        out = np.empty_like(x)

        before = i < 0
        out[before] = lv[0] + self.left_slope * (x[before] - xs[0])
        after = i >= n - 1
        out[after] = rv[-1] + self.right_slope * (x[after] - xs[-1])
        mid = ~before & ~after
        if np.any(mid):
            j = i[mid]
            w = (x[mid] - xs[j]) / (xs[j + 1] - xs[j])
            out[mid] = rv[j] + w * (lv[j + 1] - rv[j])
        return out

    def __call__(self, returns: ArrayLike) -> ArrayLike:
        """Value at R (right limit at jumps)."""
        x = np.asarray(returns, dtype=float)
        flat = x.ravel()
        out = self._evaluate(flat, "right")
        if self.floor is not None:
            out = np.maximum(out, np.asarray(self.floor(flat)))
        out = out.reshape(x.shape)
        return float(out) if out.ndim == 0 else out

    def left_limit(self, returns: ArrayLike) -> ArrayLike:
        """Limit from the left at R."""
        x = np.asarray(returns, dtype=float)
        flat = x.ravel()
        out = self._evaluate(flat, "left")
        if self.floor is not None:
            out = np.maximum(out, np.asarray(self.floor.left_limit(flat)))
        out = out.reshape(x.shape)
        return float(out) if out.ndim == 0 else out

    @property
    def has_jumps(self) -> bool:
        return bool(np.any(self.left_values != self.right_values))

    def to_dict(self) -> dict:
        return {
            "knots": self.knots.tolist(),
            "left_values": self.left_values.tolist(),
            "right_values": self.right_values.tolist(),
            "left_slope": self.left_slope,
            "right_slope": self.right_slope,
        }
