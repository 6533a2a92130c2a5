"""Simulation and pricing under LV and HWLV."""

from .analytics import bs_delta, bs_price, bs_vega, digital_price
from .errors import ConfigurationError, GridMisalignmentError, HorizonMismatchError
from .hull_white import HullWhiteParams, hw_discount_bond
from .leverage import calibrate_leverage, local_vol_surface
from .models import (
    LeverageMode,
    LeverageSurface,
    McConfig,
    ModelKind,
    ModelSpec,
    PathSet,
    PriceResult,
    VolGrid,
)
from .paths import RestartSimulator, build_time_grid, path_normals, simulate_paths
from .pricer import prepare_model, price, price_pathwise, standard_error

__all__ = [
    "HullWhiteParams",
    "hw_discount_bond",
    "ModelKind",
    "ModelSpec",
    "LeverageMode",
    "LeverageSurface",
    "McConfig",
    "PathSet",
    "PriceResult",
    "VolGrid",
    "simulate_paths",
    "build_time_grid",
    "path_normals",
    "RestartSimulator",
    "calibrate_leverage",
    "local_vol_surface",
    "prepare_model",
    "price",
    "price_pathwise",
    "standard_error",
    "bs_price",
    "bs_delta",
    "bs_vega",
    "digital_price",
    "ConfigurationError",
    "HorizonMismatchError",
    "GridMisalignmentError",
]
