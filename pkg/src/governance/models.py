"""
Inventory records.

Inventory Schema:
    ModelRecord <- MappingRecord -> ProductRecord (by payoff family)
    RiskLimit (optionally scoped to a payoff family)

Stored as one JSON document; every mutation is also an audit-log line.
"""

from datetime import date
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator


class ModelStatus(str, Enum):
    CANDIDATE = "candidate"
    APPROVED = "approved"
    RESTRICTED = "restricted"
    DECOMMISSIONED = "decommissioned"


# Forward along the lifecycle; restricted may return to approved
TRANSITIONS: Dict[ModelStatus, frozenset] = {
    ModelStatus.CANDIDATE: frozenset({ModelStatus.APPROVED, ModelStatus.DECOMMISSIONED}),
    ModelStatus.APPROVED: frozenset({ModelStatus.RESTRICTED, ModelStatus.DECOMMISSIONED}),
    ModelStatus.RESTRICTED: frozenset({ModelStatus.APPROVED, ModelStatus.DECOMMISSIONED}),
    ModelStatus.DECOMMISSIONED: frozenset(),
}


class RiskSource(str, Enum):
    """Model-risk taxonomy; the first three are quantified by FVA methods."""

    EQUITY_RATE_HYBRID = "equity_rate_hybrid"
    CORRELATION = "correlation"
    DIVIDENDS = "dividends"
    FORWARD_SKEW = "forward_skew"
    VOLATILITY_SURFACE = "volatility_surface"
    CALIBRATION = "calibration"
    HEDGING = "hedging"


QUANTIFIED_SOURCES = (RiskSource.EQUITY_RATE_HYBRID, RiskSource.CORRELATION, RiskSource.DIVIDENDS)


class ModelRecord(BaseModel):
    """A pricing model in the inventory."""

    id: str = Field(..., min_length=1)
    name: str
    risk_tier: int = Field(..., ge=1, le=3, description="1 = highest model risk")
    status: ModelStatus = ModelStatus.CANDIDATE
    last_validation: date
    review_period: int = Field(..., gt=0, description="Months between validations")
    risk_sources: List[RiskSource] = Field(default_factory=list)

    def __repr__(self) -> str:
        return f"<ModelRecord(id={self.id}, status={self.status.value}, tier={self.risk_tier})>"


class ProductRecord(BaseModel):
    """A payoff family with its feature limits."""

    id: str = Field(..., min_length=1)
    family: str = Field(..., min_length=1)
    max_maturity: float = Field(..., gt=0.0, description="Years")
    forward_start_allowed: bool = False

    def __repr__(self) -> str:
        return f"<ProductRecord(id={self.id}, family={self.family})>"


class MappingStatus(str, Enum):
    ALLOWED = "allowed"
    BLOCKED = "blocked"


class MappingRecord(BaseModel):
    """Which model may price which payoff family."""

    product_family: str
    model_id: str
    status: MappingStatus = MappingStatus.ALLOWED

    @property
    def key(self) -> str:
        return f"{self.product_family}/{self.model_id}"


class LimitMetric(str, Enum):
    CORRELATION_SENSITIVITY = "correlation_sensitivity"
    VANNA = "vanna"
    GAMMA = "gamma"


class LimitAction(str, Enum):
    WARN = "warn"
    BLOCK = "block"


class RiskLimit(BaseModel):
    """Absolute threshold on one greek, optionally for one payoff family."""

    id: str = Field(..., min_length=1)
    metric: LimitMetric
    threshold: float = Field(..., gt=0.0)
    action: LimitAction = LimitAction.WARN
    product_family: Optional[str] = None


# ============== Control results ==============

class MappingVerdict(BaseModel):
    allowed: bool
    reason: Optional[str] = None
    warning: Optional[str] = None


class LimitBreach(BaseModel):
    limit_id: str
    metric: LimitMetric
    value: float
    threshold: float
    action: LimitAction

    @property
    def blocking(self) -> bool:
        return self.action is LimitAction.BLOCK


class FeatureViolation(BaseModel):
    feature: str
    detail: str


# ============== Persistence ==============

class StoreFile(BaseModel):
    """On-disk form of the inventory."""

    models: List[ModelRecord] = Field(default_factory=list)
    products: List[ProductRecord] = Field(default_factory=list)
    mappings: List[MappingRecord] = Field(default_factory=list)
    limits: List[RiskLimit] = Field(default_factory=list)


class AuditEvent(BaseModel):
    """One line of the audit log."""

    timestamp: str
    actor: str
    action: str
    payload: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("action")
    @classmethod
    def validate_action(cls, v: str) -> str:
        if v not in AUDIT_ACTIONS:
            raise ValueError(f"unknown audit action '{v}'")
        return v


AUDIT_ACTIONS = (
    "register_model",
    "register_product",
    "set_status",
    "set_mapping",
    "add_limit",
    "override",
)
