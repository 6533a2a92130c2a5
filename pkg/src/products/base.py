"""Product protocol shared by the pricer, greeks, FVA and governance."""

from enum import Enum
from typing import List, Optional, Protocol, Tuple, runtime_checkable

import numpy as np

from ..engine.models import PathSet

Cashflows = List[Tuple[float, np.ndarray]]


class OptionType(str, Enum):
    CALL = "call"
    PUT = "put"


@runtime_checkable
class Product(Protocol):
    """
    Anything the engine can price.

    ``cashflows`` returns (time, per-path amount) pairs from the holder's
    side; amounts are in currency and divided by ``notional`` when priced.
    ``reference`` pins the initial fixing; when None the market spot is used.
    ``after(t)`` is the product seen from t (its remaining flows) and
    ``alive`` flags the paths on which it still has flows after t.
    """

    family: str
    notional: float
    reference: Optional[float]
    forward_start: Optional[float]

    @property
    def horizon(self) -> float: ...

    @property
    def event_times(self) -> Tuple[float, ...]: ...

    def cashflows(self, paths: PathSet, reference: float) -> Cashflows: ...

    def rescale(self, tenor: float) -> "Product": ...

    def with_reference(self, reference: Optional[float]) -> "Product": ...

    def after(self, t: float) -> "Product": ...

    def alive(self, paths: PathSet, reference: float, t: float) -> np.ndarray: ...
