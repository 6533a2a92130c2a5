"""
Engine value types: model selection, Monte Carlo settings, vol grids,
simulated path sets and price results.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np

from ..market_data.curves import DiscountCurve
from ..market_data.local_vol import MIN_LOCAL_VOL
from ..market_data.snapshot import MarketSnapshot
from .errors import ConfigurationError, GridMisalignmentError
from .hull_white import HullWhiteParams, hw_discount_bond

LEVERAGE_FLOOR = 0.01
LEVERAGE_CAP = 10.0
TIME_TOLERANCE = 1e-9


class ModelKind(str, Enum):
    LV = "LV"
    HWLV = "HWLV"


class LeverageMode(str, Enum):
    RECALIBRATED = "recalibrated"
    REUSE = "reuse"


# ============== Vol grids ==============

@dataclass(frozen=True)
class VolGrid:
    """
    Diffusion coefficient on (time, moneyness vs forward) pillars.

    Linear in time and moneyness, flat outside the pillars.
    """

    times: Tuple[float, ...]
    moneyness: Tuple[float, ...]
    values: np.ndarray = field(compare=False)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.times), len(self.moneyness)):
            raise ConfigurationError(
                f"vol grid values must be {len(self.times)}x{len(self.moneyness)}, got {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_t", np.array(self.times))
        object.__setattr__(self, "_k", np.array(self.moneyness))

    @property
    def horizon(self) -> float:
        return self.times[-1]

    def row(self, t: float) -> np.ndarray:
        """Values over the moneyness pillars at time t."""
        tt = self._t
        if t <= tt[0]:
            return self.values[0]
        if t >= tt[-1]:
            return self.values[-1]
        j = int(np.searchsorted(tt, t, side="right")) - 1
        lam = (t - tt[j]) / (tt[j + 1] - tt[j])
        if lam == 0.0:
            return self.values[j]
        return (1.0 - lam) * self.values[j] + lam * self.values[j + 1]

    def __call__(self, t: float, moneyness: np.ndarray) -> np.ndarray:
        return np.interp(moneyness, self._k, self.row(t))


@dataclass(frozen=True)
class LeverageSurface(VolGrid):
    """
    HWLV leverage.

    Calibrated values are clamped to [0.01, 10]. A Dupire grid taken as is
    (reuse mode, zero rate vol) keeps the local-vol floor, so it diffuses
    exactly like LV.
    """

    warning: Optional[str] = None
    sweeps: int = 0

    def __post_init__(self) -> None:
        super().__post_init__()
        if np.any(self.values < MIN_LOCAL_VOL) or np.any(self.values > LEVERAGE_CAP):
            raise ConfigurationError(f"leverage values must lie in [{MIN_LOCAL_VOL}, {LEVERAGE_CAP}]")


# ============== Model and Monte Carlo settings ==============

@dataclass(frozen=True)
class ModelSpec:
    """LV, or HWLV with Hull-White parameters, correlation and leverage."""

    kind: ModelKind = ModelKind.LV
    hw: Optional[HullWhiteParams] = None
    equity_rate_correlation: float = 0.0
    leverage: Optional[LeverageSurface] = None
    leverage_mode: LeverageMode = LeverageMode.RECALIBRATED
    model_id: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ModelKind(self.kind))
        object.__setattr__(self, "leverage_mode", LeverageMode(self.leverage_mode))
        rho = float(self.equity_rate_correlation)
        object.__setattr__(self, "equity_rate_correlation", rho)
        if not -1.0 <= rho <= 1.0:
            raise ConfigurationError(f"correlation {rho} outside [-1, 1]")
        if self.kind is ModelKind.HWLV and self.hw is None:
            raise ConfigurationError("HWLV requires Hull-White parameters")
        if self.kind is ModelKind.LV and self.leverage is not None:
            raise ConfigurationError("leverage is only defined for HWLV")

    @classmethod
    def lv(cls, model_id: Optional[str] = None) -> "ModelSpec":
        return cls(kind=ModelKind.LV, model_id=model_id)

    @classmethod
    def hwlv(
        cls,
        mean_reversion: float,
        rate_vol: float,
        correlation: float,
        leverage_mode: Union[str, LeverageMode] = LeverageMode.RECALIBRATED,
        model_id: Optional[str] = None,
    ) -> "ModelSpec":
        return cls(
            kind=ModelKind.HWLV,
            hw=HullWhiteParams(mean_reversion, rate_vol),
            equity_rate_correlation=correlation,
            leverage_mode=LeverageMode(leverage_mode),
            model_id=model_id,
        )

    @property
    def identifier(self) -> str:
        """Governance model id (defaults to the kind)."""
        return self.model_id or self.kind.value

    @property
    def is_hybrid(self) -> bool:
        return self.kind is ModelKind.HWLV

    def with_leverage(self, leverage: LeverageSurface) -> "ModelSpec":
        return replace(self, leverage=leverage)

    def with_correlation(self, correlation: float) -> "ModelSpec":
        """New correlation; any calibrated leverage is dropped."""
        return replace(self, equity_rate_correlation=correlation, leverage=None)

    def with_hw(self, hw: HullWhiteParams) -> "ModelSpec":
        """New Hull-White parameters; any calibrated leverage is dropped."""
        return replace(self, hw=hw, leverage=None)

    def without_leverage(self) -> "ModelSpec":
        return replace(self, leverage=None)


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo settings; ``threads`` never changes results."""

    n_paths: int
    steps_per_year: int = 48
    seed: int = 0
    antithetic: bool = True
    threads: int = 1

    def __post_init__(self) -> None:
        if self.n_paths < 2:
            raise ConfigurationError(f"n_paths must be >= 2, got {self.n_paths}")
        if self.steps_per_year < 12:
            raise ConfigurationError(f"steps_per_year must be >= 12, got {self.steps_per_year}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1")

    def with_paths(self, n_paths: int) -> "McConfig":
        return replace(self, n_paths=n_paths)


# ============== Simulation output ==============

@dataclass
class PathSet:
    """
    Simulated paths recorded on ``times``.

    ``bank`` is the money-market account; under LV it is the deterministic
    curve growth broadcast over paths.
    Paths restarted at a later date have ``origin`` set to that date;
    their discount factors run back to it.
    """

    times: np.ndarray
    spot: np.ndarray
    bank: np.ndarray
    short_rate: Optional[np.ndarray]
    model: ModelSpec
    market: MarketSnapshot
    origin: float = 0.0

    @property
    def n_paths(self) -> int:
        return self.spot.shape[0]

    @property
    def curve(self) -> DiscountCurve:
        return self.market.discount

    def index(self, t: float) -> int:
        """Column of time t; raises when t is not a recorded time."""
        j = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[j] - t) > TIME_TOLERANCE:
            raise GridMisalignmentError(f"time {t} is not on the simulated grid")
        return j

    def spot_at(self, t: float) -> np.ndarray:
        return self.spot[:, self.index(t)]

    def discount(self, t: float) -> np.ndarray:
        """Pathwise discount factor from t back to ``origin``."""
        j = self.index(t)
        if self.short_rate is None:
            df = float(self.curve.discount_factor(float(self.times[j])))
            if self.origin != 0.0:
                df /= float(self.curve.discount_factor(self.origin))
            return np.full(self.n_paths, df)
        return 1.0 / self.bank[:, j]

    def simple_forward(self, start: float, end: float) -> np.ndarray:
        """
        Simple forward rate for [start, end] fixed at ``start``.

        Deterministic curve forward under LV, HW-implied from the pathwise
        short rate under HWLV.
        """
        tau = end - start
        if self.short_rate is None or self.model.hw is None:
            df = self.curve.discount_factor(np.array([start, end]))
            value = (df[0] / df[1] - 1.0) / tau
            return np.full(self.n_paths, value)
        r_start = self.short_rate[:, self.index(start)]
        bond = hw_discount_bond(self.model.hw, self.curve, start, end, r_start)
        return (1.0 / bond - 1.0) / tau

    def take(self, rows: np.ndarray) -> "PathSet":
        """Subset of paths (used for single-path cashflow queries)."""
        return PathSet(
            times=self.times,
            spot=self.spot[rows],
            bank=self.bank[rows],
            short_rate=None if self.short_rate is None else self.short_rate[rows],
            model=self.model,
            market=self.market,
            origin=self.origin,
        )


@dataclass(frozen=True)
class PriceResult:
    """Monte Carlo price per unit notional with its standard error."""

    value: float
    std_error: float
    n_paths: int
    model_id: str = ""
    governance_override: bool = False

    def __post_init__(self) -> None:
        if self.std_error < 0.0:
            raise ConfigurationError("std_error must be >= 0")

    @property
    def bp(self) -> float:
        """Value in basis points of notional."""
        return self.value * 1e4

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "value_bp": self.bp,
            "std_error": self.std_error,
            "n_paths": self.n_paths,
            "model_id": self.model_id,
            "governance_override": self.governance_override,
        }
