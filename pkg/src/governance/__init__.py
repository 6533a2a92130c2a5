"""Model inventory, audit log and governance controls."""

from .controls import check_limits, check_mapping, due_reviews, enforce_mapping, restrict_features
from .errors import (
    DuplicateRecordError,
    GovernanceBlockError,
    GovernanceError,
    IllegalTransitionError,
    LimitConfigurationError,
    UnknownRecordError,
)
from .models import (
    QUANTIFIED_SOURCES,
    TRANSITIONS,
    AuditEvent,
    FeatureViolation,
    LimitAction,
    LimitBreach,
    LimitMetric,
    MappingRecord,
    MappingStatus,
    MappingVerdict,
    ModelRecord,
    ModelStatus,
    ProductRecord,
    RiskLimit,
    RiskSource,
)
from .store import InventoryStore

__all__ = [
    "InventoryStore",
    "check_limits",
    "check_mapping",
    "due_reviews",
    "enforce_mapping",
    "restrict_features",
    "GovernanceError",
    "IllegalTransitionError",
    "UnknownRecordError",
    "DuplicateRecordError",
    "GovernanceBlockError",
    "LimitConfigurationError",
    "AuditEvent",
    "FeatureViolation",
    "LimitAction",
    "LimitBreach",
    "LimitMetric",
    "MappingRecord",
    "MappingStatus",
    "MappingVerdict",
    "ModelRecord",
    "ModelStatus",
    "ProductRecord",
    "RiskLimit",
    "RiskSource",
    "QUANTIFIED_SOURCES",
    "TRANSITIONS",
]
