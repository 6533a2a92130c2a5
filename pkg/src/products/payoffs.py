"""
Payoff definitions and pathwise cashflows.

All amounts are from the holder's side, in currency. Strikes and barriers are
ratios of the initial fixing (the market spot unless a reference is pinned,
or the spot on the forward-start date).
"""

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, TypeAdapter, ValidationError, field_validator

from ..engine.errors import ConfigurationError
from ..engine.models import TIME_TOLERANCE, PathSet
from .base import Cashflows, OptionType
from .errors import ProductFileError
from .profile import PayoffProfile
from .softening import SofteningPolicy, soften

logger = logging.getLogger(__name__)


def _fixing(paths: PathSet, reference: float, forward_start: Optional[float]) -> Union[float, np.ndarray]:
    """Initial fixing: the pinned reference, or the spot on the forward-start date."""
    if forward_start is None:
        return reference
    return paths.spot_at(forward_start)


def _check_forward_start(forward_start: Optional[float], first_date: float) -> None:
    if forward_start is not None and not 0.0 < forward_start < first_date:
        raise ConfigurationError(f"forward_start {forward_start} must lie in (0, {first_date})")


def _pending_forward_start(forward_start: Optional[float], t: float) -> Optional[float]:
    if forward_start is not None and forward_start > t + TIME_TOLERANCE:
        return forward_start
    return None


# ============== Terminal payoffs ==============

class _TerminalPayoffMixin:
    """Cashflow logic shared by products paying notional x profile(R) at expiry."""

    expiry: float
    notional: float
    reference: Optional[float]
    forward_start: Optional[float]

    def terminal_profile(self) -> PayoffProfile:
        raise NotImplementedError

    @property
    def horizon(self) -> float:
        return self.expiry

    @property
    def event_times(self) -> Tuple[float, ...]:
        if self.forward_start is None:
            return (self.expiry,)
        return (self.forward_start, self.expiry)

    def cashflows(self, paths: PathSet, reference: float) -> Cashflows:
        fixing = _fixing(paths, reference, self.forward_start)
        returns = paths.spot_at(self.expiry) / fixing
        return [(self.expiry, self.notional * np.asarray(self.terminal_profile()(returns)))]

    def rescale(self, tenor: float):
        if tenor <= 0.0:
            raise ConfigurationError(f"tenor must be > 0, got {tenor}")
        return replace(self, expiry=float(tenor))

    def after(self, t: float):
        """The flows left after t; a forward start on or before t is dropped, so the caller pins the fixing."""
        if t >= self.expiry - TIME_TOLERANCE:
            raise ConfigurationError(f"no flows left after {t} (expiry {self.expiry})")
        return replace(self, forward_start=_pending_forward_start(self.forward_start, t))

    def alive(self, paths: PathSet, reference: float, t: float) -> np.ndarray:
        return np.ones(paths.n_paths, dtype=bool)

    def with_reference(self, reference: Optional[float]):
        return replace(self, reference=reference)


@dataclass(frozen=True)
class VanillaOption(_TerminalPayoffMixin):
    """European put or call paying notional x max(+-(R - strike), 0)."""

    strike: float
    expiry: float
    option_type: OptionType = OptionType.PUT
    notional: float = 1.0
    reference: Optional[float] = None
    forward_start: Optional[float] = None
    family: str = "vanilla"

    def __post_init__(self) -> None:
        object.__setattr__(self, "option_type", OptionType(self.option_type))
        if not (self.strike > 0.0 and self.expiry > 0.0 and self.notional > 0.0):
            raise ConfigurationError("vanilla strike, expiry and notional must be > 0")
        _check_forward_start(self.forward_start, self.expiry)

    @property
    def is_call(self) -> bool:
        return self.option_type is OptionType.CALL

    def terminal_profile(self) -> PayoffProfile:
        return PayoffProfile.call(self.strike) if self.is_call else PayoffProfile.put(self.strike)


@dataclass(frozen=True)
class DigitalOption(_TerminalPayoffMixin):
    """Cash digital paying notional x leverage; the put pays strictly below the strike."""

    strike: float
    expiry: float
    leverage: float = 1.0
    option_type: OptionType = OptionType.PUT
    notional: float = 1.0
    reference: Optional[float] = None
    forward_start: Optional[float] = None
    family: str = "digital"

    def __post_init__(self) -> None:
        object.__setattr__(self, "option_type", OptionType(self.option_type))
        if not (self.strike > 0.0 and self.expiry > 0.0 and self.leverage > 0.0 and self.notional > 0.0):
            raise ConfigurationError("digital strike, expiry, leverage and notional must be > 0")
        _check_forward_start(self.forward_start, self.expiry)

    def terminal_profile(self) -> PayoffProfile:
        if self.option_type is OptionType.CALL:
            return PayoffProfile.digital_call(self.strike, self.leverage)
        return PayoffProfile.digital_put(self.strike, self.leverage)


@dataclass(frozen=True)
class ForwardContract(_TerminalPayoffMixin):
    """Linear payoff notional x (R - strike)."""

    expiry: float
    strike: float = 1.0
    notional: float = 1.0
    reference: Optional[float] = None
    forward_start: Optional[float] = None
    family: str = "forward"

    def __post_init__(self) -> None:
        if not (self.expiry > 0.0 and self.notional > 0.0):
            raise ConfigurationError("forward expiry and notional must be > 0")
        _check_forward_start(self.forward_start, self.expiry)

    def terminal_profile(self) -> PayoffProfile:
        return PayoffProfile.forward(self.strike)


@dataclass(frozen=True)
class TerminalPayoff(_TerminalPayoffMixin):
    """Arbitrary profile of the terminal return, e.g. a softened vanilla or digital."""

    profile: PayoffProfile
    expiry: float
    notional: float = 1.0
    family: str = "terminal"
    reference: Optional[float] = None
    forward_start: Optional[float] = None
    label: str = ""

    def __post_init__(self) -> None:
        if not (self.expiry > 0.0 and self.notional > 0.0):
            raise ConfigurationError("terminal payoff expiry and notional must be > 0")
        _check_forward_start(self.forward_start, self.expiry)

    def terminal_profile(self) -> PayoffProfile:
        return self.profile


# ============== Autocallable ==============

@dataclass(frozen=True)
class Autocallable:
    """
    Yearly autocallable note.

    Called on the first observation with return >= barrier, paying
    notional x (redemption + i x coupon_step). If never called the holder
    receives notional x [redemption - max(put_strike - R, 0)
    - digital_leverage x 1{R < digital_strike}] at maturity. While alive the
    holder pays floating coupons (forward + spread) for each period.
    """

    notional: float = 1.0
    observation_dates: Tuple[float, ...] = (1.0, 2.0, 3.0, 4.0, 5.0)
    autocall_barrier: float = 1.0
    coupon_step: float = 0.05
    redemption: float = 1.0
    short_put_strike: float = 0.5
    digital_strike: float = 0.5
    digital_leverage: float = 0.5
    floating_leg: bool = False
    floating_spread: float = 0.0
    softening: Optional[SofteningPolicy] = None
    forward_start: Optional[float] = None
    reference: Optional[float] = None
    coupon_offset: int = 0
    accrual_start: Optional[float] = None
    family: str = "autocallable"

    _maturity_profile: PayoffProfile = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        dates = tuple(float(t) for t in self.observation_dates)
        object.__setattr__(self, "observation_dates", dates)
        if not dates or dates[0] <= 0.0 or any(b <= a for a, b in zip(dates, dates[1:])):
            raise ConfigurationError("observation dates must be positive and strictly increasing")
        if not (self.autocall_barrier > 0.0 and self.short_put_strike > 0.0 and self.digital_strike > 0.0):
            raise ConfigurationError("barrier and strikes must be > 0")
        if self.digital_leverage < 0.0 or self.coupon_step < 0.0:
            raise ConfigurationError("digital_leverage and coupon_step must be >= 0")
        if self.notional <= 0.0:
            raise ConfigurationError("notional must be > 0")
        _check_forward_start(self.forward_start, dates[0])
        if self.coupon_offset < 0:
            raise ConfigurationError("coupon_offset must be >= 0")
        if self.accrual_start is not None and not 0.0 <= self.accrual_start < dates[0]:
            raise ConfigurationError(f"accrual_start {self.accrual_start} must lie in [0, {dates[0]})")

        profile = PayoffProfile.combine(
            [(-1.0, PayoffProfile.put(self.short_put_strike)),
             (-self.digital_leverage, PayoffProfile.digital_put(self.digital_strike))],
            constant=self.redemption,
        )
        if self.softening is not None:
            profile = soften(profile, self.softening)
        object.__setattr__(self, "_maturity_profile", profile)

    @property
    def horizon(self) -> float:
        return self.observation_dates[-1]

    @property
    def start(self) -> float:
        return 0.0 if self.forward_start is None else self.forward_start

    @property
    def first_accrual(self) -> float:
        """Start of the first floating period."""
        return self.start if self.accrual_start is None else self.accrual_start

    @property
    def event_times(self) -> Tuple[float, ...]:
        times = self.observation_dates
        if self.forward_start is not None:
            times = (self.forward_start,) + times
        return times

    def maturity_profile(self) -> PayoffProfile:
        """Redemption of a note never called, as a profile of the final return."""
        return self._maturity_profile

    def cashflows(self, paths: PathSet, reference: float) -> Cashflows:
        return autocall_cashflows(paths, self, reference)

    def cashflows_for_path(self, paths: PathSet, row: int, reference: Optional[float] = None) -> List[Tuple[float, float]]:
        """Non-zero (time, amount) flows of a single path."""
        ref = paths.spot[row, 0] if reference is None else reference
        flows = autocall_cashflows(paths.take(np.array([row])), self, ref)
        return [(t, float(a[0])) for t, a in flows if a[0] != 0.0]

    def rescale(self, tenor: float) -> "Autocallable":
        """Same observation frequency, last observation at ``tenor``."""
        period = self.observation_dates[0] - self.start
        n = (tenor - self.start) / period
        if n < 1.0 - TIME_TOLERANCE or abs(n - round(n)) > 1e-6:
            raise ConfigurationError(f"tenor {tenor} is not a whole number of {period}y periods")
        dates = tuple(self.start + period * k for k in range(1, int(round(n)) + 1))
        return replace(self, observation_dates=dates)

    def with_reference(self, reference: Optional[float]) -> "Autocallable":
        return replace(self, reference=reference)

    def after(self, t: float) -> "Autocallable":
        """
        The note seen from t: observations after t with the coupon count
        carried on. Once the forward start has fixed, the floating period
        restarts at t and the caller pins the fixing.
        """
        remaining = tuple(d for d in self.observation_dates if d > t + TIME_TOLERANCE)
        if not remaining:
            raise ConfigurationError(f"no observations left after {t}")
        pending = _pending_forward_start(self.forward_start, t)
        return replace(
            self,
            observation_dates=remaining,
            coupon_offset=self.coupon_offset + len(self.observation_dates) - len(remaining),
            accrual_start=self.accrual_start if pending is not None else float(t),
            forward_start=pending,
        )

    def alive(self, paths: PathSet, reference: float, t: float) -> np.ndarray:
        """Paths not called on any observation up to t."""
        alive = np.ones(paths.n_paths, dtype=bool)
        past = [d for d in self.observation_dates if d <= t + TIME_TOLERANCE]
        if past:
            fixing = _fixing(paths, reference, self.forward_start)
            for d in past:
                alive &= paths.spot_at(d) / fixing < self.autocall_barrier
        return alive

    def with_softening(self, policy: Optional[SofteningPolicy]) -> "Autocallable":
        return replace(self, softening=policy)

    def to_dict(self) -> dict:
        """Every field, defaults included."""
        return {
            "type": "autocallable",
            "notional": self.notional,
            "observation_dates": list(self.observation_dates),
            "autocall_barrier": self.autocall_barrier,
            "coupon_step": self.coupon_step,
            "redemption": self.redemption,
            "short_put_strike": self.short_put_strike,
            "digital_strike": self.digital_strike,
            "digital_leverage": self.digital_leverage,
            "floating_leg": self.floating_leg,
            "floating_spread": self.floating_spread,
            "softening": None if self.softening is None else self.softening.to_dict(),
            "forward_start": self.forward_start,
            "reference": self.reference,
            "coupon_offset": self.coupon_offset,
            "accrual_start": self.accrual_start,
            "family": self.family,
        }


def floating_coupons(paths: PathSet, product: Autocallable, start: float, end: float, alive: np.ndarray) -> np.ndarray:
    """
    Holder-paid floating coupon for [start, end], paid at ``end``.

    Due on paths alive at ``start``; the rate is the simple forward fixed at
    ``start`` (curve forward under LV, HW-implied under HWLV).
    """
    rate = paths.simple_forward(start, end)
    return np.where(alive, -product.notional * (rate + product.floating_spread) * (end - start), 0.0)


def autocall_cashflows(paths: PathSet, product: Autocallable, reference: float) -> Cashflows:
    """
    Holder cashflows of the autocallable on every path.

    Returns:
        (time, amounts) per observation date, plus floating coupons when
        the floating leg is on

    Raises:
        GridMisalignmentError: If an observation date is not on the grid
    """
    fixing = _fixing(paths, reference, product.forward_start)
    n = paths.n_paths
    alive = np.ones(n, dtype=bool)
    flows: Cashflows = []
    period_start = product.first_accrual
    last = len(product.observation_dates) - 1

    for i, t in enumerate(product.observation_dates):
        returns = paths.spot_at(t) / fixing
        if product.floating_leg:
            flows.append((t, floating_coupons(paths, product, period_start, t, alive)))

        called = alive & (returns >= product.autocall_barrier)
        coupon = (product.coupon_offset + i + 1) * product.coupon_step
        amount = np.where(called, product.notional * (product.redemption + coupon), 0.0)
        if i == last:
            survivors = alive & ~called
            at_maturity = product.notional * np.asarray(product.maturity_profile()(returns))
            amount = amount + np.where(survivors, at_maturity, 0.0)
        flows.append((t, amount))

        alive = alive & ~called
        period_start = t
    return flows


# ============== Product files ==============

class _SofteningBlock(BaseModel):
    max_delta: Optional[float] = Field(None, gt=0)
    max_gamma: Optional[float] = Field(None, gt=0)

    def to_policy(self) -> SofteningPolicy:
        return SofteningPolicy(
            max_delta=math.inf if self.max_delta is None else self.max_delta,
            max_gamma=math.inf if self.max_gamma is None else self.max_gamma,
        )


class AutocallableFile(BaseModel):
    type: Literal["autocallable"] = "autocallable"
    notional: float = Field(1.0, gt=0)
    observation_dates: List[float] = Field(default_factory=lambda: [1.0, 2.0, 3.0, 4.0, 5.0])
    autocall_barrier: float = Field(1.0, gt=0)
    coupon_step: float = Field(0.05, ge=0)
    redemption: float = 1.0
    short_put_strike: float = Field(0.5, gt=0)
    digital_strike: float = Field(0.5, gt=0)
    digital_leverage: float = Field(0.5, ge=0)
    floating_leg: bool = False
    floating_spread: float = 0.0
    softening: Optional[_SofteningBlock] = None
    forward_start: Optional[float] = None
    family: str = "autocallable"

    @field_validator("observation_dates")
    @classmethod
    def validate_dates(cls, v: List[float]) -> List[float]:
        if not v or v[0] <= 0 or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("observation_dates must be positive and strictly increasing")
        return v

    def build(self) -> Autocallable:
        return Autocallable(
            notional=self.notional,
            observation_dates=tuple(self.observation_dates),
            autocall_barrier=self.autocall_barrier,
            coupon_step=self.coupon_step,
            redemption=self.redemption,
            short_put_strike=self.short_put_strike,
            digital_strike=self.digital_strike,
            digital_leverage=self.digital_leverage,
            floating_leg=self.floating_leg,
            floating_spread=self.floating_spread,
            softening=None if self.softening is None else self.softening.to_policy(),
            forward_start=self.forward_start,
            family=self.family,
        )


class VanillaFile(BaseModel):
    type: Literal["vanilla"]
    strike: float = Field(..., gt=0)
    expiry: float = Field(..., gt=0)
    option_type: OptionType = OptionType.PUT
    notional: float = Field(1.0, gt=0)
    softening: Optional[_SofteningBlock] = None
    family: str = "vanilla"

    def build(self):
        product = VanillaOption(self.strike, self.expiry, self.option_type, self.notional, family=self.family)
        return _maybe_soften(product, self.softening)


class DigitalFile(BaseModel):
    type: Literal["digital"]
    strike: float = Field(..., gt=0)
    expiry: float = Field(..., gt=0)
    leverage: float = Field(1.0, gt=0)
    option_type: OptionType = OptionType.PUT
    notional: float = Field(1.0, gt=0)
    softening: Optional[_SofteningBlock] = None
    family: str = "digital"

    def build(self):
        product = DigitalOption(
            self.strike, self.expiry, self.leverage, self.option_type, self.notional, family=self.family
        )
        return _maybe_soften(product, self.softening)


class ForwardFile(BaseModel):
    type: Literal["forward"]
    expiry: float = Field(..., gt=0)
    strike: float = 1.0
    notional: float = Field(1.0, gt=0)
    family: str = "forward"

    def build(self) -> ForwardContract:
        return ForwardContract(self.expiry, self.strike, self.notional, family=self.family)


def _maybe_soften(product, block: Optional[_SofteningBlock]):
    if block is None:
        return product
    from .softening import soften_product

    return soften_product(product, block.to_policy())


ProductFile = Annotated[
    Union[AutocallableFile, VanillaFile, DigitalFile, ForwardFile],
    Field(discriminator="type"),
]
_product_adapter = TypeAdapter(ProductFile)


def parse_product(raw: dict):
    """Validate a product dict; ``type`` defaults to autocallable."""
    raw = dict(raw)
    raw.setdefault("type", "autocallable")
    return _product_adapter.validate_python(raw)


def load_product(path: Path):
    """
    Load a product file.

    Returns:
        (product, echo) where echo is the file content with every default
        filled in

    Raises:
        ProductFileError: Missing file, bad JSON or schema violation
    """
    path = Path(path)
    if not path.exists():
        raise ProductFileError(f"Product file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ProductFileError(f"Product file is not valid JSON: {path}: {e}")
    try:
        parsed = parse_product(raw)
    except ValidationError as e:
        raise ProductFileError(f"Product file does not follow the schema: {path}: {e}")

    product = parsed.build()
    logger.info(f"Loaded {parsed.type} product from {path.name} (horizon {product.horizon}y)")
    return product, parsed.model_dump(mode="json")
