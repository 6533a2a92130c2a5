"""
Governance controls consulted around pricing.

All checks are pure functions of a loaded store; only ``enforce_mapping``
writes (an override audit line).
"""

import logging
from datetime import date
from typing import TYPE_CHECKING, Iterable, List

import pandas as pd

from .errors import GovernanceBlockError, LimitConfigurationError
from .models import (
    FeatureViolation,
    LimitBreach,
    MappingStatus,
    MappingVerdict,
    ModelStatus,
    ProductRecord,
    RiskLimit,
)
from .store import InventoryStore

if TYPE_CHECKING:
    from ..products.base import Product
    from ..products.greeks import GreeksReport

logger = logging.getLogger(__name__)


# ============== Product-model mapping ==============

def check_mapping(product_family: str, model_id: str, store: InventoryStore) -> MappingVerdict:
    """
    Verdict for pricing ``product_family`` with ``model_id``.

    Blocked when the model is decommissioned or still a candidate, when no
    mapping exists, or when the mapping is blocked. A restricted model is
    allowed with a warning.

    Raises:
        UnknownRecordError: Unknown model id or payoff family
    """
    model = store.model(model_id)
    store.product_for_family(product_family)

    if model.status is ModelStatus.DECOMMISSIONED:
        return MappingVerdict(allowed=False, reason="model decommissioned")
    if model.status is ModelStatus.CANDIDATE:
        return MappingVerdict(allowed=False, reason="model not approved (candidate)")
    mapping = store.mapping(product_family, model_id)
    if mapping is None:
        return MappingVerdict(allowed=False, reason=f"no mapping for {product_family}/{model_id}")
    if mapping.status is MappingStatus.BLOCKED:
        return MappingVerdict(allowed=False, reason="mapping blocked")
    if model.status is ModelStatus.RESTRICTED:
        return MappingVerdict(allowed=True, warning="model restricted")
    return MappingVerdict(allowed=True)


def enforce_mapping(store: InventoryStore, product_family: str, model_id: str, override: bool = False) -> bool:
    """
    Apply ``check_mapping`` before pricing.

    Returns:
        True when a blocked mapping was overridden (and audit-logged)

    Raises:
        GovernanceBlockError: Blocked mapping without override
    """
    verdict = check_mapping(product_family, model_id, store)
    if verdict.warning:
        logger.warning(f"{product_family}/{model_id}: {verdict.warning}")
    if verdict.allowed:
        return False
    if not override:
        raise GovernanceBlockError(f"{product_family}/{model_id} blocked: {verdict.reason}")
    store.record_override(product_family, model_id, verdict.reason or "")
    return True


# ============== Periodic review ==============

def due_reviews(store: InventoryStore, as_of: date) -> List[str]:
    """
    Models whose validation is older than their review period, most overdue first.

    Decommissioned models are never due.
    """
    as_of_ts = pd.Timestamp(as_of)
    overdue = []
    for record in store.models.values():
        if record.status is ModelStatus.DECOMMISSIONED:
            continue
        due = pd.Timestamp(record.last_validation) + pd.DateOffset(months=record.review_period)
        if as_of_ts > due:
            overdue.append(((as_of_ts - due).days, record.id))
    overdue.sort(key=lambda item: (-item[0], item[1]))
    return [model_id for _, model_id in overdue]


# ============== Limits and feature restrictions ==============

def check_limits(report: "GreeksReport", limits: Iterable[RiskLimit]) -> List[LimitBreach]:
    """
    Breaches of absolute thresholds.

    Raises:
        LimitConfigurationError: Limit on a metric the report does not carry
    """
    breaches = []
    for limit in limits:
        sensitivity = report.metric(limit.metric.value)
        if sensitivity is None:
            raise LimitConfigurationError(
                f"limit '{limit.id}' is on {limit.metric.value}, which this model does not report"
            )
        if abs(sensitivity.value) > limit.threshold:
            breach = LimitBreach(
                limit_id=limit.id,
                metric=limit.metric,
                value=sensitivity.value,
                threshold=limit.threshold,
                action=limit.action,
            )
            breaches.append(breach)
            logger.warning(
                f"Limit {limit.id} breached: |{limit.metric.value}| = {abs(sensitivity.value):.6g} "
                f"> {limit.threshold} ({limit.action.value})"
            )
    return breaches


def restrict_features(product: "Product", record: ProductRecord) -> List[FeatureViolation]:
    """Maturity and forward-start features the product record does not permit."""
    violations = []
    if product.horizon > record.max_maturity:
        violations.append(FeatureViolation(
            feature="maturity",
            detail=f"maturity {product.horizon}y exceeds {record.max_maturity}y",
        ))
    if product.forward_start is not None and not record.forward_start_allowed:
        violations.append(FeatureViolation(
            feature="forward_start",
            detail=f"forward start at {product.forward_start}y is not allowed for {record.family}",
        ))
    return violations
