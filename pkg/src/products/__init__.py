"""Payoffs, softening and greeks."""

from .base import OptionType, Product
from .errors import GridMisalignmentError, ProductError, ProductFileError, UnsupportedMetricError
from .greeks import GreekBumps, GreeksReport, Sensitivity, greeks
from .payoffs import (
    Autocallable,
    DigitalOption,
    ForwardContract,
    TerminalPayoff,
    VanillaOption,
    autocall_cashflows,
    floating_coupons,
    load_product,
    parse_product,
)
from .profile import PayoffProfile
from .softening import SofteningPolicy, soften, soften_product

__all__ = [
    "Product",
    "OptionType",
    "Autocallable",
    "VanillaOption",
    "DigitalOption",
    "ForwardContract",
    "TerminalPayoff",
    "PayoffProfile",
    "autocall_cashflows",
    "floating_coupons",
    "load_product",
    "parse_product",
    "SofteningPolicy",
    "soften",
    "soften_product",
    "GreekBumps",
    "GreeksReport",
    "Sensitivity",
    "greeks",
    "ProductError",
    "ProductFileError",
    "UnsupportedMetricError",
    "GridMisalignmentError",
]
