"""Fair value adjustments for model risk."""

from .errors import (
    FvaError,
    InsufficientSamplesError,
    UnknownParameterError,
    UnsupportedModeError,
)
from .hedging import DeltaSurfaces, HedgingResult, delta_dates, delta_surfaces, fva_hedging_simulation
from .methods import (
    ComparisonGrid,
    Position,
    fva_calibration_variation,
    fva_conservative_set,
    fva_model_comparison,
    fva_parameter_range,
    fva_sensitivity_multiple,
    make_pricer,
)
from .params import PARAMETERS, ParameterSample, apply_parameter, load_samples, marked_value, resolve_parameter
from .report import FvaComponent, FvaMethod, FvaMode, FvaReport, build_report, report_markdown

__all__ = [
    "FvaError",
    "InsufficientSamplesError",
    "UnknownParameterError",
    "UnsupportedModeError",
    "DeltaSurfaces",
    "HedgingResult",
    "delta_dates",
    "delta_surfaces",
    "fva_hedging_simulation",
    "ComparisonGrid",
    "Position",
    "fva_calibration_variation",
    "fva_conservative_set",
    "fva_model_comparison",
    "fva_parameter_range",
    "fva_sensitivity_multiple",
    "make_pricer",
    "PARAMETERS",
    "ParameterSample",
    "apply_parameter",
    "load_samples",
    "marked_value",
    "resolve_parameter",
    "FvaComponent",
    "FvaMethod",
    "FvaMode",
    "FvaReport",
    "build_report",
    "report_markdown",
]
