"""
mrisk - Main entry point.

Commands:
- price: Monte Carlo price under LV or HWLV, optional greeks and limit checks
- grid: HWLV - LV differences over tenors x correlations
- fva: fair value adjustments per the configured methods
- hedge: delta-hedging simulation
- inventory: model/product inventory and audit log

Exit codes: 0 success, 2 governance block, 3 invalid input, 4 blocking limit breach.
"""

import argparse
import logging
import sys
from datetime import date
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from .cli import EXIT_GOVERNANCE_BLOCK, EXIT_INVALID, cmd_fva, cmd_grid, cmd_hedge, cmd_inventory, cmd_price
from .config import ConfigError, RunConfig, settings
from .errors import MriskError
from .governance import GovernanceBlockError

logger = logging.getLogger(__name__)

COMMANDS = {
    "price": cmd_price,
    "grid": cmd_grid,
    "fva": cmd_fva,
    "hedge": cmd_hedge,
}

INVENTORY_SUBCOMMANDS = ("register", "status", "map", "limits", "due-reviews", "show")


def setup_logging() -> None:
    """Configure root logging once: stderr plus an optional file."""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if settings.log_file:
        Path(settings.log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(settings.log_file, mode="a"))
    logging.basicConfig(
        level=getattr(logging, settings.log_level, logging.INFO),
        format="[%(asctime)s] %(levelname)s %(name)s: %(message)s",
        handlers=handlers,
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrisk", description="Equity model-risk engine")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in COMMANDS:
        cmd = sub.add_parser(name, help=COMMANDS[name].__doc__.splitlines()[0])
        cmd.add_argument("--config", type=Path, required=True, help="Run configuration JSON")
        cmd.add_argument("--seed", type=int, default=None, help="Override mc.seed")
        cmd.add_argument("--threads", type=int, default=None, help="Cap pricing threads")
        cmd.add_argument("--out", type=Path, default=None, help="Output directory")
        cmd.add_argument(
            "--override-governance",
            action="store_true",
            help="Proceed through blocked mappings (audit-logged)",
        )

    inv = sub.add_parser("inventory", help="Query or mutate the model inventory")
    inv.add_argument("subcommand", choices=INVENTORY_SUBCOMMANDS)
    inv.add_argument("--config", type=Path, default=None, help="Run configuration supplying the store paths")
    inv.add_argument("--store", type=Path, default=None, help="Store JSON (overrides the config)")
    inv.add_argument("--audit-log", type=Path, default=None, help="Audit log JSON-lines (overrides the config)")
    inv.add_argument("--record", type=Path, default=None, help="Record JSON for register/limits")
    inv.add_argument("--kind", choices=("model", "product"), default="model", help="Record kind for register")
    inv.add_argument("--id", dest="record_id", default=None, help="Model id")
    inv.add_argument("--status", default=None, help="New model status or mapping status")
    inv.add_argument("--family", default=None, help="Payoff family")
    inv.add_argument("--as-of", type=date.fromisoformat, default=None, help="Review date (YYYY-MM-DD)")
    return parser


def apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    """CLI flags win over file values."""
    if args.seed is not None:
        config = config.model_copy(update={"mc": config.mc.model_copy(update={"seed": args.seed})})
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        config = config.model_copy(update={"threads": args.threads})
    if args.out is not None:
        config = config.model_copy(update={"out_dir": args.out})
    return config


def _inventory(args: argparse.Namespace) -> int:
    store, audit = args.store, args.audit_log
    if args.config is not None:
        governance = RunConfig.load(args.config).governance
        store = store or governance.store
        audit = audit or governance.audit_log
    if store is None:
        raise ConfigError("inventory needs --store or a config with governance.store")
    return cmd_inventory(
        args.subcommand,
        store,
        audit_log=audit,
        record=args.record,
        kind=args.kind,
        record_id=args.record_id,
        status=args.status,
        family=args.family,
        as_of=args.as_of,
    )


def run(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run the command and map errors to exit codes."""
    args = build_parser().parse_args(argv)
    try:
        if args.command == "inventory":
            return _inventory(args)
        config = apply_overrides(RunConfig.load(args.config), args)
        logger.info(f"Running {args.command} with {args.config} (seed {config.mc.seed})")
        return COMMANDS[args.command](config, override=args.override_governance)
    except GovernanceBlockError as e:
        print(f"governance block: {e}", file=sys.stderr)
        return EXIT_GOVERNANCE_BLOCK
    except (MriskError, ValidationError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    """Main entry point."""
    setup_logging()
    sys.exit(run())


if __name__ == "__main__":
    main()
