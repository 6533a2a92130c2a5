"""
Implied volatility surface on an (expiry, moneyness) grid.

Moneyness is strike over forward. Interpolation is linear in total variance
along expiry and linear in variance along moneyness; both axes extrapolate
flat in volatility.
"""

import math
from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np

from .errors import DomainError, InvariantViolationError

ArrayLike = Union[float, np.ndarray]

MAX_VOL = 5.0


@dataclass(frozen=True)
class ImpliedVolSurface:
    """Implied vols, one row per expiry, one column per moneyness pillar."""

    expiries: Tuple[float, ...]
    moneyness: Tuple[float, ...]
    vols: Tuple[Tuple[float, ...], ...]

    _expiries: np.ndarray = field(init=False, repr=False, compare=False)
    _moneyness: np.ndarray = field(init=False, repr=False, compare=False)
    _var: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        expiries = tuple(float(t) for t in self.expiries)
        moneyness = tuple(float(k) for k in self.moneyness)
        vols = tuple(tuple(float(v) for v in row) for row in self.vols)
        object.__setattr__(self, "expiries", expiries)
        object.__setattr__(self, "moneyness", moneyness)
        object.__setattr__(self, "vols", vols)

        if not expiries or not moneyness:
            raise InvariantViolationError("surface_shape", "expiries and moneyness must be non-empty")
        if len(vols) != len(expiries) or any(len(row) != len(moneyness) for row in vols):
            raise InvariantViolationError(
                "surface_shape", f"vols must be {len(expiries)}x{len(moneyness)}"
            )
        if expiries[0] <= 0.0 or any(b <= a for a, b in zip(expiries, expiries[1:])):
            raise InvariantViolationError("expiries_increasing", "expiries must be positive and strictly increasing")
        if moneyness[0] <= 0.0 or any(b <= a for a, b in zip(moneyness, moneyness[1:])):
            raise InvariantViolationError("moneyness_increasing", "moneyness pillars must be positive and strictly increasing")
        if moneyness[0] > 0.5 or moneyness[-1] < 1.5:
            raise InvariantViolationError("moneyness_span", "moneyness pillars must span at least [0.5, 1.5]")
        for row in vols:
            for v in row:
                if not (math.isfinite(v) and 0.0 < v <= MAX_VOL):
                    raise InvariantViolationError("vol_range", f"vol {v} outside (0, {MAX_VOL}]")

        vol_arr = np.array(vols)
        exp_arr = np.array(expiries)
        total_var = vol_arr ** 2 * exp_arr[:, None]
        decreasing = np.diff(total_var, axis=0) < 0.0
        if np.any(decreasing):
            i, j = np.argwhere(decreasing)[0]
            raise InvariantViolationError(
                "calendar_arbitrage",
                f"total variance decreases between T={expiries[i]} and T={expiries[i + 1]} "
                f"at moneyness {moneyness[j]}",
            )

        object.__setattr__(self, "_expiries", exp_arr)
        object.__setattr__(self, "_moneyness", np.array(moneyness))
        object.__setattr__(self, "_var", vol_arr ** 2)

    @classmethod
    def flat(cls, vol: float, expiries: Tuple[float, ...] = (0.25, 1.0, 5.0, 10.0)) -> "ImpliedVolSurface":
        """Flat surface over a default grid."""
        moneyness = (0.2, 0.5, 1.0, 1.5, 3.0)
        return cls(expiries, moneyness, tuple((vol,) * len(moneyness) for _ in expiries))

    def _row_variance(self, k: np.ndarray) -> np.ndarray:
        """Variance per expiry row at moneyness k, shape (n_expiries, *k.shape)."""
        k_flat = np.clip(k, self._moneyness[0], self._moneyness[-1]).ravel()
        rows = [np.interp(k_flat, self._moneyness, var_row) for var_row in self._var]
        return np.stack(rows).reshape((len(rows),) + k.shape)

    def _variance(self, t: np.ndarray, k: np.ndarray) -> np.ndarray:
        """Annualised variance w(t, k) / t, exact on grid nodes."""
        t, k = np.broadcast_arrays(t, k)
        row_var = self._row_variance(k)
        exps = self._expiries

        if len(exps) == 1:
            return row_var[0].copy()

        idx = np.clip(np.searchsorted(exps, t, side="right") - 1, 0, len(exps) - 2)
        t0 = exps[idx]
        t1 = exps[idx + 1]
        v0 = np.take_along_axis(row_var, idx[None, ...], axis=0)[0]
        v1 = np.take_along_axis(row_var, (idx + 1)[None, ...], axis=0)[0]
        lam = (t - t0) / (t1 - t0)

        interior = (v0 * t0 * (1.0 - lam) + v1 * t1 * lam) / np.where(t > 0, t, 1.0)
        out = np.where(lam <= 0.0, v0, np.where(lam >= 1.0, v1, interior))
        # flat vol outside the expiry range
        out = np.where(t <= exps[0], row_var[0], out)
        out = np.where(t >= exps[-1], row_var[-1], out)
        return out

    def implied_vol(self, t: ArrayLike, moneyness: ArrayLike) -> ArrayLike:
        """
        Interpolated implied volatility.

        Raises:
            DomainError: If t <= 0 or moneyness <= 0
        """
        t_arr = np.asarray(t, dtype=float)
        k_arr = np.asarray(moneyness, dtype=float)
        if np.any(t_arr <= 0.0) or np.any(k_arr <= 0.0):
            raise DomainError(f"implied_vol requires t > 0 and moneyness > 0, got t={t}, k={moneyness}")
        vol = np.sqrt(self._variance(t_arr, k_arr))
        return float(vol) if np.ndim(vol) == 0 else vol

    def total_variance(self, t: ArrayLike, moneyness: ArrayLike) -> ArrayLike:
        """w(t, k) = vol(t, k)^2 * t; zero at t = 0."""
        t_arr = np.asarray(t, dtype=float)
        k_arr = np.asarray(moneyness, dtype=float)
        safe_t = np.where(t_arr > 0.0, t_arr, 1.0)
        w = np.where(t_arr > 0.0, self._variance(safe_t, k_arr) * t_arr, 0.0)
        return float(w) if np.ndim(w) == 0 else w

    def expiry_cell_width(self, t: float) -> float:
        """Width of the expiry cell containing t (first expiry below the grid)."""
        exps = self._expiries
        if t < exps[0] or len(exps) == 1:
            return float(exps[0])
        idx = min(int(np.searchsorted(exps, t, side="right")) - 1, len(exps) - 2)
        return float(exps[idx + 1] - exps[idx])

    def shifted(self, shift: float) -> "ImpliedVolSurface":
        """Parallel shift of every vol (floored just above zero)."""
        return ImpliedVolSurface(
            self.expiries,
            self.moneyness,
            tuple(tuple(max(v + shift, 1e-4) for v in row) for row in self.vols),
        )


def implied_vol(surface: ImpliedVolSurface, t: float, moneyness: float) -> float:
    """Implied volatility at (t, strike/forward)."""
    return surface.implied_vol(t, moneyness)
