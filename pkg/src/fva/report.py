"""
FVA components and the consolidated report.

Aggregation is additive with no diversification: ``total`` sums the external
amounts; ``coverage`` sums every amount, embedded or not, so it does not
depend on the mode chosen.
"""

import logging
from datetime import date
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

from pydantic import BaseModel, Field, computed_field

from .errors import UnsupportedModeError

logger = logging.getLogger(__name__)


class FvaMethod(str, Enum):
    PARAMETER_RANGE = "parameter_range"
    SENSITIVITY_MULTIPLE = "sensitivity_multiple"
    MODEL_COMPARISON = "model_comparison"
    CALIBRATION_VARIATION = "calibration_variation"
    HEDGING_SIMULATION = "hedging_simulation"
    CONSERVATIVE_SET = "conservative_set"


class FvaMode(str, Enum):
    EXTERNAL = "external"
    EMBEDDED = "embedded"


# No single parameter can be booked for these
NOT_EMBEDDABLE = (FvaMethod.MODEL_COMPARISON, FvaMethod.HEDGING_SIMULATION)


class FvaComponent(BaseModel):
    """One method's FVA amount, per unit notional."""

    method: FvaMethod
    label: str = ""
    amount: float = Field(..., ge=0.0)
    mode: FvaMode = FvaMode.EXTERNAL
    parameter: Optional[str] = None
    conservative_value: Optional[Union[float, str]] = None
    std_error: Optional[float] = None
    diagnostics: Dict[str, Any] = Field(default_factory=dict)

    def model_post_init(self, __context: Any) -> None:
        if not self.label:
            self.label = self.method.value if self.parameter is None else f"{self.method.value}:{self.parameter}"

    @computed_field
    @property
    def external_amount(self) -> float:
        return 0.0 if self.mode is FvaMode.EMBEDDED else self.amount

    @computed_field
    @property
    def amount_bp(self) -> float:
        return self.amount * 1e4


class FvaReport(BaseModel):
    as_of: Optional[date] = None
    components: List[FvaComponent] = Field(default_factory=list)
    total: float = 0.0
    coverage: float = 0.0
    booked_parameters: Dict[str, Union[float, str, None]] = Field(default_factory=dict)

    @computed_field
    @property
    def total_bp(self) -> float:
        return self.total * 1e4


def build_report(
    components: Sequence[FvaComponent],
    mode_overrides: Optional[Mapping[str, Union[str, FvaMode]]] = None,
    as_of: Optional[date] = None,
) -> FvaReport:
    """
    Consolidate components.

    Args:
        components: Computed components, external by default
        mode_overrides: label (or method name) -> mode
        as_of: Market date of the report

    Raises:
        UnsupportedModeError: Embedding a model comparison or hedging simulation
    """
    overrides = {k: FvaMode(v) for k, v in (mode_overrides or {}).items()}
    final: List[FvaComponent] = []
    booked: Dict[str, Union[float, str, None]] = {}
    for component in components:
        mode = overrides.get(component.label, overrides.get(component.method.value, component.mode))
        if mode is FvaMode.EMBEDDED:
            if component.method in NOT_EMBEDDABLE:
                raise UnsupportedModeError(
                    f"{component.method.value} has no single bookable parameter and cannot be embedded"
                )
            booked[component.label] = component.conservative_value
        final.append(component.model_copy(update={"mode": mode}))

    total = sum(c.external_amount for c in final)
    coverage = sum(c.amount for c in final)
    logger.info(f"FVA report: {len(final)} components, total {total * 1e4:.4f} bp, coverage {coverage * 1e4:.4f} bp")
    return FvaReport(as_of=as_of, components=final, total=total, coverage=coverage, booked_parameters=booked)


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def report_markdown(report: FvaReport) -> str:
    """Markdown table with the same float repr as the JSON output."""
    lines = [
        f"# FVA report{'' if report.as_of is None else f' as of {report.as_of.isoformat()}'}",
        "",
        "| component | method | mode | amount | amount_bp | external_amount | booked_parameter |",
        "|---|---|---|---|---|---|---|",
    ]
    for c in report.components:
        booked = c.conservative_value if c.mode is FvaMode.EMBEDDED else None
        lines.append(
            f"| {c.label} | {c.method.value} | {c.mode.value} | {_fmt(c.amount)} | {_fmt(c.amount_bp)} "
            f"| {_fmt(c.external_amount)} | {_fmt(booked)} |"
        )
    lines += [
        "",
        f"- total: {_fmt(report.total)}",
        f"- total_bp: {_fmt(report.total_bp)}",
        f"- coverage: {_fmt(report.coverage)}",
        "",
    ]
    return "\n".join(lines)
