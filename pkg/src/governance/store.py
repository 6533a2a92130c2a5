"""
Flat-file model inventory with an append-only audit log.

Single writer: the store is loaded, mutated and saved by one process. Every
mutation saves the store (when it has a path) and then appends exactly one
JSON line to the audit log, so replaying the log from an empty store
reproduces the saved state.
"""

import json
import logging
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Union

from pydantic import ValidationError

from ..config import Settings
from .errors import DuplicateRecordError, GovernanceError, IllegalTransitionError, UnknownRecordError
from .models import (
    TRANSITIONS,
    AuditEvent,
    MappingRecord,
    MappingStatus,
    ModelRecord,
    ModelStatus,
    ProductRecord,
    RiskLimit,
    StoreFile,
)

logger = logging.getLogger(__name__)


class InventoryStore:
    """
    Models, products, mappings and limits keyed by id.

    Args:
        path: JSON file used by ``save`` when no path is given
        audit_log: JSON-lines file receiving one event per mutation (None: no audit)
        actor: Audit actor (None: MRISK_USER as set when each event is written)
    """

    def __init__(
        self,
        path: Optional[Path] = None,
        audit_log: Optional[Path] = None,
        actor: Optional[str] = None,
    ):
        self.path = Path(path) if path is not None else None
        self.audit_log = Path(audit_log) if audit_log is not None else None
        self._actor = actor
        self.models: Dict[str, ModelRecord] = {}
        self.products: Dict[str, ProductRecord] = {}
        self.mappings: Dict[str, MappingRecord] = {}
        self.limits: Dict[str, RiskLimit] = {}

    @property
    def actor(self) -> str:
        return self._actor or Settings().user

    # ============== Persistence ==============

    @classmethod
    def load(cls, path: Path, audit_log: Optional[Path] = None, actor: Optional[str] = None) -> "InventoryStore":
        """
        Read a store file; a missing file gives an empty store at that path.

        Raises:
            GovernanceError: Unreadable or invalid store file
        """
        store = cls(path, audit_log, actor)
        path = Path(path)
        if not path.exists():
            logger.info(f"No store at {path}, starting empty")
            return store
        try:
            data = StoreFile.model_validate_json(path.read_text(encoding="utf-8"))
        except ValidationError as e:
            raise GovernanceError(f"Invalid store file {path}: {e}") from e
        store._fill(data)
        logger.info(
            f"Loaded store {path}: {len(store.models)} models, {len(store.products)} products, "
            f"{len(store.mappings)} mappings, {len(store.limits)} limits"
        )
        return store

    def _fill(self, data: StoreFile) -> None:
        self.models = {m.id: m for m in data.models}
        self.products = {p.id: p for p in data.products}
        self.mappings = {m.key: m for m in data.mappings}
        self.limits = {l.id: l for l in data.limits}

    def to_file(self) -> StoreFile:
        return StoreFile(
            models=list(self.models.values()),
            products=list(self.products.values()),
            mappings=list(self.mappings.values()),
            limits=list(self.limits.values()),
        )

    def save(self, path: Optional[Path] = None) -> Path:
        target = Path(path) if path is not None else self.path
        if target is None:
            raise GovernanceError("No store path to save to")
        target.parent.mkdir(parents=True, exist_ok=True)
        tmp = target.with_name(target.name + ".tmp")
        tmp.write_text(self.to_file().model_dump_json(indent=2) + "\n", encoding="utf-8")
        os.replace(tmp, target)
        logger.debug(f"Saved store to {target}")
        return target

    # ============== Audit ==============

    def _audit(self, action: str, payload: dict) -> None:
        # the audit line follows a successful save: a failed write leaves no orphan event
        if self.path is not None:
            self.save()
        if self.audit_log is None:
            return
        actor = self.actor
        event = AuditEvent(
            timestamp=datetime.now(timezone.utc).isoformat(),
            actor=actor,
            action=action,
            payload=payload,
        )
        self.audit_log.parent.mkdir(parents=True, exist_ok=True)
        with self.audit_log.open("a", encoding="utf-8", newline="\n") as fh:
            fh.write(event.model_dump_json() + "\n")
        logger.info(f"Audit: {actor} {action} {payload}")

    @classmethod
    def replay(cls, audit_log: Path) -> "InventoryStore":
        """
        Rebuild a store by applying every logged mutation to an empty store.

        Override events are informational and skipped.
        """
        store = cls()
        with Path(audit_log).open(encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    event = AuditEvent.model_validate_json(line)
                except ValidationError as e:
                    raise GovernanceError(f"Bad audit line {line_no}: {e}") from e
                store._apply(event)
        return store

    def _apply(self, event: AuditEvent) -> None:
        p = event.payload
        if event.action == "register_model":
            self.register(ModelRecord.model_validate(p))
        elif event.action == "register_product":
            self.register(ProductRecord.model_validate(p))
        elif event.action == "set_status":
            self.set_status(p["id"], p["status"])
        elif event.action == "set_mapping":
            self.set_mapping(p["product_family"], p["model_id"], p["status"])
        elif event.action == "add_limit":
            self.add_limit(RiskLimit.model_validate(p))

    # ============== Mutations ==============

    def register(self, record: Union[ModelRecord, ProductRecord]) -> str:
        """
        Add a model or product record.

        Raises:
            DuplicateRecordError: Id already registered
        """
        if isinstance(record, ModelRecord):
            table, action = self.models, "register_model"
        else:
            table, action = self.products, "register_product"
        if record.id in table:
            raise DuplicateRecordError(f"'{record.id}' is already registered")
        table[record.id] = record
        self._audit(action, record.model_dump(mode="json"))
        return record.id

    def model(self, model_id: str) -> ModelRecord:
        record = self.models.get(model_id)
        if record is None:
            raise UnknownRecordError(f"Unknown model '{model_id}'")
        return record

    def product_for_family(self, family: str) -> ProductRecord:
        for record in self.products.values():
            if record.family == family:
                return record
        raise UnknownRecordError(f"No product record for family '{family}'")

    def set_status(self, model_id: str, status: Union[str, ModelStatus]) -> ModelRecord:
        """
        Move a model along its lifecycle.

        Raises:
            UnknownRecordError: Unknown model id
            IllegalTransitionError: Transition not in the lifecycle
        """
        status = ModelStatus(status)
        record = self.model(model_id)
        if status not in TRANSITIONS[record.status]:
            raise IllegalTransitionError(
                f"'{model_id}': {record.status.value} -> {status.value} is not allowed"
            )
        updated = record.model_copy(update={"status": status})
        self.models[model_id] = updated
        self._audit("set_status", {"id": model_id, "status": status.value, "previous": record.status.value})
        return updated

    def set_mapping(
        self,
        product_family: str,
        model_id: str,
        status: Union[str, MappingStatus] = MappingStatus.ALLOWED,
    ) -> MappingRecord:
        """Create or update a mapping; both ends must be registered."""
        self.model(model_id)
        self.product_for_family(product_family)
        mapping = MappingRecord(product_family=product_family, model_id=model_id, status=MappingStatus(status))
        self.mappings[mapping.key] = mapping
        self._audit("set_mapping", mapping.model_dump(mode="json"))
        return mapping

    def mapping(self, product_family: str, model_id: str) -> Optional[MappingRecord]:
        return self.mappings.get(f"{product_family}/{model_id}")

    def add_limit(self, limit: RiskLimit) -> str:
        if limit.id in self.limits:
            raise DuplicateRecordError(f"Limit '{limit.id}' is already registered")
        self.limits[limit.id] = limit
        self._audit("add_limit", limit.model_dump(mode="json"))
        return limit.id

    def limits_for(self, family: Optional[str]) -> List[RiskLimit]:
        """Limits that apply to ``family``: global ones plus family-scoped ones."""
        return [l for l in self.limits.values() if l.product_family is None or l.product_family == family]

    def record_override(self, product_family: str, model_id: str, reason: str) -> None:
        """Log a governance override; the store itself is unchanged."""
        self._audit("override", {"product_family": product_family, "model_id": model_id, "reason": reason})
        logger.warning(f"Governance override by {self.actor}: {product_family}/{model_id} ({reason})")

    def __repr__(self) -> str:
        return f"<InventoryStore(path={self.path}, models={len(self.models)}, products={len(self.products)})>"
