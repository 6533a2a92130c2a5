"""Command-line commands."""

from .commands import (
    EXIT_GOVERNANCE_BLOCK,
    EXIT_INVALID,
    EXIT_LIMIT_BREACH,
    EXIT_OK,
    build_mc,
    build_model,
    cmd_fva,
    cmd_grid,
    cmd_hedge,
    cmd_inventory,
    cmd_price,
)

__all__ = [
    "EXIT_OK",
    "EXIT_GOVERNANCE_BLOCK",
    "EXIT_INVALID",
    "EXIT_LIMIT_BREACH",
    "build_mc",
    "build_model",
    "cmd_fva",
    "cmd_grid",
    "cmd_hedge",
    "cmd_inventory",
    "cmd_price",
]
