"""
Command implementations.

Each command takes a validated RunConfig, writes its output files and returns
an exit code. Exceptions propagate to ``src.main``, which maps them to the
exit-code contract.
"""

import json
import logging
from dataclasses import replace
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd

from ..config import ConfigError, FvaMethodSection, ModelSection, RunConfig, settings
from ..engine import McConfig, ModelSpec, price
from ..fva import (
    FvaComponent,
    ParameterSample,
    Position,
    apply_parameter,
    build_report,
    fva_calibration_variation,
    fva_conservative_set,
    fva_hedging_simulation,
    fva_model_comparison,
    fva_parameter_range,
    fva_sensitivity_multiple,
    load_samples,
    report_markdown,
)
from ..governance import (
    GovernanceBlockError,
    InventoryStore,
    LimitAction,
    ModelRecord,
    ProductRecord,
    RiskLimit,
    check_limits,
    due_reviews,
    enforce_mapping,
    restrict_features,
)
from ..market_data import MarketSnapshot, load_snapshot
from ..products import greeks, load_product
from ..products.base import Product

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_GOVERNANCE_BLOCK = 2
EXIT_INVALID = 3
EXIT_LIMIT_BREACH = 4


# ============== Helpers ==============

def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat()


def _write_json(path: Path, payload: Dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8", newline="\n")
    logger.info(f"Wrote {path}")
    return path


def _out_dir(config: RunConfig) -> Path:
    return config.out_dir if config.out_dir is not None else Path(settings.out_dir)


def build_model(section: ModelSection, market: MarketSnapshot) -> ModelSpec:
    """ModelSpec from a config section; HWLV correlation defaults to the snapshot's."""
    if section.kind == "LV":
        return ModelSpec.lv(section.model_id)
    correlation = section.correlation if section.correlation is not None else market.equity_rate_correlation
    return ModelSpec.hwlv(
        section.mean_reversion,
        section.rate_vol,
        correlation,
        leverage_mode=section.leverage_mode,
        model_id=section.model_id,
    )


def build_mc(config: RunConfig) -> McConfig:
    return McConfig(
        n_paths=config.mc.n_paths,
        steps_per_year=config.mc.steps_per_year,
        seed=config.mc.seed,
        antithetic=config.mc.antithetic,
        threads=config.threads or settings.threads,
    )


def _load_inputs(config: RunConfig) -> Tuple[MarketSnapshot, Product, Dict[str, Any]]:
    if config.product is None:
        raise ConfigError("this command needs a product file")
    market = load_snapshot(config.snapshot)
    product, echo = load_product(config.product)
    if config.governance.product_family:
        product = replace(product, family=config.governance.product_family)
    return market, product, echo


def _open_store(config: RunConfig) -> Optional[InventoryStore]:
    if config.governance.store is None:
        return None
    return InventoryStore.load(config.governance.store, config.governance.audit_log)


def _check_features(store: Optional[InventoryStore], product: Product, override: bool) -> List[Dict[str, str]]:
    """Feature restrictions of the product's family; violations block like a mapping."""
    if store is None:
        return []
    violations = restrict_features(product, store.product_for_family(product.family))
    if violations:
        reason = "; ".join(v.detail for v in violations)
        if not override:
            raise GovernanceBlockError(f"{product.family} feature restrictions: {reason}")
        store.record_override(product.family, "*", reason)
    return [v.model_dump(mode="json") for v in violations]


def _echo(config: RunConfig, product_echo: Dict[str, Any]) -> Dict[str, Any]:
    return {"config": config.model_dump(mode="json"), "product": product_echo}


# ============== price ==============

def cmd_price(config: RunConfig, override: bool = False) -> int:
    """Price the product; optionally compute greeks and check risk limits. Writes price.json."""
    market, product, product_echo = _load_inputs(config)
    model = build_model(config.model, market)
    mc = build_mc(config)
    store = _open_store(config)
    violations = _check_features(store, product, override)

    result = price(product, model, market, mc, store=store, override=override)
    payload: Dict[str, Any] = {
        "command": "price",
        "generated_at": _timestamp(),
        **_echo(config, product_echo),
        "model_id": model.identifier,
        "result": result.to_dict(),
        "feature_violations": violations,
    }

    exit_code = EXIT_OK
    if config.governance.enforce_limits:
        if store is None:
            raise ConfigError("governance.enforce_limits needs governance.store")
        report = greeks(product, model, market, mc)
        breaches = check_limits(report, store.limits_for(product.family))
        payload["greeks"] = report.to_dict()
        payload["limit_breaches"] = [b.model_dump(mode="json") for b in breaches]
        if any(b.action is LimitAction.BLOCK for b in breaches):
            exit_code = EXIT_LIMIT_BREACH

    _write_json(_out_dir(config) / "price.json", payload)
    return exit_code


# ============== grid ==============

def _hybrid_section(section: ModelSection) -> ModelSection:
    return section if section.kind == "HWLV" else section.model_copy(update={"kind": "HWLV", "model_id": None})


def cmd_grid(config: RunConfig, override: bool = False) -> int:
    """Signed HWLV - LV differences over tenors x correlations. Writes grid.csv and grid_meta.json."""
    market, product, product_echo = _load_inputs(config)
    mc = build_mc(config)
    baseline = ModelSpec.lv()
    alternative = build_model(_hybrid_section(config.model), market)
    store = _open_store(config)
    if store is not None:
        for model in (baseline, alternative):
            enforce_mapping(store, product.family, model.identifier, override)

    grid, component = fva_model_comparison(
        product, market, baseline, alternative,
        config.fva.grid.tenors, config.fva.grid.correlations, mc,
    )
    out = _out_dir(config)
    out.mkdir(parents=True, exist_ok=True)
    grid.to_frame(bp=True).to_csv(out / "grid.csv", lineterminator="\n")

    _write_json(out / "grid_meta.json", {
        "command": "grid",
        "generated_at": _timestamp(),
        **_echo(config, product_echo),
        "unit": "bp of notional, alternative minus baseline",
        "baseline": baseline.identifier,
        "alternative": alternative.identifier,
        "std_errors_bp": [[float(v) * 1e4 for v in row] for row in grid.std_errors],
        "calibration_warnings": {repr(k): v for k, v in grid.warnings.items()},
        "component": component.model_dump(mode="json"),
    })
    for rho, warning in grid.warnings.items():
        logger.warning(f"Leverage calibration at rho={rho}: {warning}")
    return EXIT_OK


# ============== fva ==============

def _samples(section: FvaMethodSection) -> ParameterSample:
    if section.samples is not None:
        return ParameterSample(section.param, tuple(section.samples))
    if section.samples_file is not None:
        return load_samples(section.param, section.samples_file)
    raise ConfigError(f"{section.method} needs samples or samples_file")


def _variants(section: FvaMethodSection, model: ModelSpec, market: MarketSnapshot):
    variants = []
    for i, variant in enumerate(section.variants):
        m, mk = model, market
        if variant.snapshot is not None:
            m, mk = model.without_leverage(), load_snapshot(variant.snapshot)
        for name, value in variant.overrides.items():
            m, mk = apply_parameter(name, m, mk, value)
        parts = ([variant.snapshot.stem] if variant.snapshot is not None else []) + [
            f"{k}={v}" for k, v in variant.overrides.items()
        ]
        variants.append((",".join(parts) or f"variant_{i}", m, mk))
    return variants


def _run_method(
    section: FvaMethodSection,
    config: RunConfig,
    product: Product,
    model: ModelSpec,
    market: MarketSnapshot,
    mc: McConfig,
) -> FvaComponent:
    position = Position(config.fva.position)
    needs_param = ("parameter_range", "sensitivity_multiple", "conservative_set")
    if section.method in needs_param and not section.param:
        raise ConfigError(f"{section.method} needs a param")

    if section.method == "parameter_range":
        return fva_parameter_range(
            product, model, market, _samples(section), mc,
            p_lo=section.p_lo, p_hi=section.p_hi, position=position,
        )
    if section.method == "sensitivity_multiple":
        return fva_sensitivity_multiple(
            product, model, market, section.param, section.multiple, mc,
            bump=section.bump, unit_move=section.unit_move, position=position,
        )
    if section.method == "conservative_set":
        if not section.values:
            raise ConfigError("conservative_set needs values")
        return fva_conservative_set(product, model, market, section.param, section.values, mc, position=position)
    if section.method == "calibration_variation":
        return fva_calibration_variation(
            product, model, _variants(section, model, market), mc, market=market, position=position,
        )
    if section.method == "model_comparison":
        if section.alternative is None:
            raise ConfigError("model_comparison needs an alternative model")
        _, component = fva_model_comparison(
            product, market, model, build_model(section.alternative, market),
            config.fva.grid.tenors, config.fva.grid.correlations, mc, position=position,
        )
        return component
    return _hedge(config, product, model, market, mc).component


def cmd_fva(config: RunConfig, override: bool = False) -> int:
    """Run every configured FVA method. Writes fva_report.json and fva_report.md."""
    market, product, product_echo = _load_inputs(config)
    model = build_model(config.model, market)
    mc = build_mc(config)
    store = _open_store(config)
    if store is not None:
        enforce_mapping(store, product.family, model.identifier, override)
    _check_features(store, product, override)

    ref = product.reference if product.reference is not None else market.spot
    product = product.with_reference(ref)
    components = []
    modes: Dict[str, str] = {}
    for section in config.fva.methods:
        component = _run_method(section, config, product, model, market, mc)
        components.append(component)
        modes[component.label] = section.mode

    report = build_report(components, modes, as_of=market.as_of)
    out = _out_dir(config)
    _write_json(out / "fva_report.json", {
        "command": "fva",
        "generated_at": _timestamp(),
        **_echo(config, product_echo),
        "report": report.model_dump(mode="json"),
    })
    (out / "fva_report.md").write_text(report_markdown(report), encoding="utf-8", newline="\n")
    return EXIT_OK


# ============== hedge ==============

def _hedge(config: RunConfig, product: Product, model: ModelSpec, market: MarketSnapshot, mc: McConfig):
    hedge = config.hedge
    realized_market = load_snapshot(hedge.realized_snapshot) if hedge.realized_snapshot else market
    realized_model = build_model(hedge.realized_model, realized_market) if hedge.realized_model else model
    return fva_hedging_simulation(
        product, model, realized_model, market, mc,
        rebalance_every_step=hedge.rebalance_every_step,
        kappa=hedge.kappa if hedge.kappa is not None else config.fva.kappa,
        realized_market=realized_market,
        world_paths=hedge.world_paths,
        steps_per_year=hedge.steps_per_year,
        inner_paths=hedge.inner_paths,
        ladder_size=hedge.ladder_size,
        delta_refresh_per_year=hedge.delta_refresh_per_year,
        position=Position(hedge.position),
    )


def cmd_hedge(config: RunConfig, override: bool = False) -> int:
    """Delta-hedging simulation. Writes pnl.csv and hedge_component.json."""
    market, product, product_echo = _load_inputs(config)
    model = build_model(config.model, market)
    mc = build_mc(config)
    store = _open_store(config)
    if store is not None:
        enforce_mapping(store, product.family, model.identifier, override)

    result = _hedge(config, product, model, market, mc)
    out = _out_dir(config)
    out.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({"path": range(len(result.pnl)), "pnl": result.pnl})
    frame.to_csv(out / "pnl.csv", index=False, lineterminator="\n")
    _write_json(out / "hedge_component.json", {
        "command": "hedge",
        "generated_at": _timestamp(),
        **_echo(config, product_echo),
        "component": result.component.model_dump(mode="json"),
    })
    return EXIT_OK


# ============== inventory ==============

def _read_record(path: Optional[Path]) -> Dict[str, Any]:
    if path is None:
        raise ConfigError("--record is required")
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Record file not found: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"Record file is not valid JSON: {path}: {e}")


def cmd_inventory(
    subcommand: str,
    store_path: Path,
    audit_log: Optional[Path] = None,
    record: Optional[Path] = None,
    kind: str = "model",
    record_id: Optional[str] = None,
    status: Optional[str] = None,
    family: Optional[str] = None,
    as_of: Optional[date] = None,
) -> int:
    """
    Query or mutate the inventory store.

    Subcommands: register, status, map, limits, due-reviews, show. Mutations
    save the store and append to the audit log.
    """
    store = InventoryStore.load(store_path, audit_log)

    if subcommand == "register":
        raw = _read_record(record)
        parsed = ModelRecord.model_validate(raw) if kind == "model" else ProductRecord.model_validate(raw)
        store.register(parsed)
        print(parsed.id)
    elif subcommand == "status":
        if not (record_id and status):
            raise ConfigError("status needs --id and --status")
        updated = store.set_status(record_id, status)
        print(f"{updated.id}: {updated.status.value}")
    elif subcommand == "map":
        if not (family and record_id):
            raise ConfigError("map needs --family and --id (model id)")
        mapping = store.set_mapping(family, record_id, status or "allowed")
        print(f"{mapping.key}: {mapping.status.value}")
    elif subcommand == "limits":
        if record is not None:
            store.add_limit(RiskLimit.model_validate(_read_record(record)))
        for limit in store.limits_for(family) if family else store.limits.values():
            print(limit.model_dump_json())
    elif subcommand == "due-reviews":
        for model_id in due_reviews(store, as_of or date.today()):
            print(model_id)
    elif subcommand == "show":
        print(store.to_file().model_dump_json(indent=2))
    else:
        raise ConfigError(f"Unknown inventory subcommand '{subcommand}'")
    return EXIT_OK
