"""
Delta-hedging simulation.

The desk sells the product at the hedge-model price and delta hedges with the
underlying, self-financing through the world bank account. World paths follow
the realized model (and optionally a different market). Hedge deltas come
from the hedge model: at each delta date the product's remaining flows are
revalued on paths restarted from a ladder of spot levels, bumped up and down
with common random numbers, then interpolated per world path.

Path-dependent state is carried per world path: a called autocallable has no
delta, and after a forward start fixes, spots are read in moneyness of the
path's own fixing.

All P&L figures are discounted to inception, per unit notional.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from ..config import settings
from ..engine.models import TIME_TOLERANCE, McConfig, ModelSpec, PathSet
from ..engine.paths import RestartSimulator, simulate_paths
from ..engine.pricer import discounted_cashflows, prepare_model, price_pathwise, standard_error
from ..market_data.curves import forward_price
from ..market_data.snapshot import MarketSnapshot
from ..products.base import Product
from .methods import Position
from .report import FvaComponent, FvaMethod

logger = logging.getLogger(__name__)

SPOT_BUMP = 0.01
MIN_LADDER_WIDTH = 0.05
LADDER_STDEVS = 4.0
LOSS_QUANTILE = 0.95


@dataclass(frozen=True)
class HedgingResult:
    component: FvaComponent
    pnl: np.ndarray

    @property
    def mean_pnl(self) -> float:
        return float(np.mean(self.pnl))


@dataclass(frozen=True)
class DeltaSurfaces:
    """Hedge-model deltas per delta date on a ladder of spot levels."""

    times: np.ndarray
    levels: np.ndarray
    deltas: np.ndarray

    def delta(self, t: float, spot: np.ndarray) -> np.ndarray:
        """Deltas of the latest date on or before t."""
        r = int(np.searchsorted(self.times, t + TIME_TOLERANCE, side="right")) - 1
        return np.interp(spot, self.levels[r], self.deltas[r])


def _table_fixing(product: Product, fixing: float, market: MarketSnapshot) -> float:
    """Fixing the delta tables are built with: the forward on the forward-start date when there is one."""
    if product.forward_start is None:
        return fixing
    return float(forward_price(market.equity, market.discount, product.forward_start))


def delta_dates(
    world_times: np.ndarray,
    expiry: float,
    rebalance_every_step: bool,
    per_year: Optional[int] = None,
) -> np.ndarray:
    """
    Dates the hedge-model delta is computed on.

    Every world step before expiry by default; ``per_year`` coarsens to a
    regular schedule, later steps reusing the latest table. Inception only
    when the hedge is never rebalanced.
    """
    if not rebalance_every_step:
        return np.array([0.0])
    if per_year is None:
        return np.asarray(world_times[world_times < expiry - TIME_TOLERANCE], dtype=float)
    n = int(math.ceil(expiry * per_year - TIME_TOLERANCE))
    return np.array([r / per_year for r in range(n) if r / per_year < expiry - TIME_TOLERANCE])


def delta_surfaces(
    product: Product,
    fixing: float,
    model: ModelSpec,
    market: MarketSnapshot,
    config: McConfig,
    dates: np.ndarray,
    ladder_size: int,
    ladder_vol: float,
) -> DeltaSurfaces:
    """
    Central-difference deltas of the hedge-model value of the remaining flows.

    Levels at date t are forward(t) x exp(u) for u evenly spread over
    +-max(4 vol sqrt(t), 5%). Values are in time-t money per unit notional;
    every level and both bumps reuse the same inner paths.
    """
    simulator = RestartSimulator(
        model, market, product.horizon, config, restart_times=dates, event_times=product.event_times
    )
    n = simulator.n_paths
    levels = np.empty((len(dates), ladder_size))
    deltas = np.empty_like(levels)

    for r, t in enumerate(dates):
        t = float(t)
        remaining = product.after(t)
        width = max(LADDER_STDEVS * ladder_vol * math.sqrt(t), MIN_LADDER_WIDTH)
        centre = float(forward_price(market.equity, market.discount, t))
        ladder = centre * np.exp(np.linspace(-width, width, ladder_size))
        bumped = np.concatenate([ladder * (1.0 + SPOT_BUMP), ladder * (1.0 - SPOT_BUMP)])
        paths = simulator.paths(t, np.repeat(bumped, n))
        values = discounted_cashflows(remaining, paths, fixing).reshape(2 * ladder_size, n).mean(axis=1)
        up, down = values[:ladder_size], values[ladder_size:]
        levels[r] = ladder
        deltas[r] = (up - down) / (2.0 * SPOT_BUMP * ladder)
        logger.debug(f"Delta surface at t={t:.4f}: levels [{ladder[0]:.4g}, {ladder[-1]:.4g}]")

    return DeltaSurfaces(np.asarray(dates, dtype=float), levels, deltas)


@dataclass(frozen=True)
class _WorldBook:
    """The sold product along the world paths."""

    product: Product
    world: PathSet
    fixing: float
    table_fixing: float

    def alive(self, t: float) -> np.ndarray:
        return self.product.alive(self.world, self.fixing, t)

    def _scale(self, t: float) -> Union[float, np.ndarray]:
        start = self.product.forward_start
        if start is None or t < start - TIME_TOLERANCE:
            return 1.0
        return self.table_fixing / self.world.spot_at(start)

    def delta(self, surfaces: DeltaSurfaces, t: float, spot: np.ndarray) -> np.ndarray:
        scale = self._scale(t)
        return np.where(self.alive(t), scale * surfaces.delta(t, spot * scale), 0.0)


def _hedge_gains(
    book: _WorldBook,
    surfaces: DeltaSurfaces,
    discount: np.ndarray,
    carry_growth: np.ndarray,
    rebalance_every_step: bool,
) -> Tuple[np.ndarray, np.ndarray]:
    """Discounted gains of the hedge and the inception deltas."""
    times, spot = book.world.times, book.world.spot
    gains = np.zeros(spot.shape[0])
    delta = book.delta(surfaces, 0.0, spot[:, 0])
    inception = delta
    for n in range(len(times) - 1):
        t = float(times[n])
        if n > 0:
            if rebalance_every_step:
                delta = book.delta(surfaces, t, spot[:, n])
            else:
                delta = np.where(book.alive(t), delta, 0.0)
        gains += delta * (spot[:, n + 1] * carry_growth[n] * discount[:, n + 1] - spot[:, n] * discount[:, n])
    return gains, inception


def fva_hedging_simulation(
    product: Product,
    hedge_model: ModelSpec,
    realized_model: ModelSpec,
    market: MarketSnapshot,
    config: McConfig,
    rebalance_every_step: bool = True,
    kappa: float = 1.0,
    realized_market: Optional[MarketSnapshot] = None,
    world_paths: int = 5_000,
    steps_per_year: int = 252,
    inner_paths: int = 2_000,
    ladder_size: int = 41,
    delta_refresh_per_year: Optional[int] = None,
    position: Position = Position.SHORT,
) -> HedgingResult:
    """
    Simulate a delta hedge and turn the P&L distribution into an FVA amount.

    P&L of the short desk = P0 - discounted product flows + discounted hedge
    gains, with P0 the hedge-model price. amount = max(0, E[loss])
    + kappa x (95th percentile loss - E[loss]).

    Args:
        product: Any product (terminal payoffs, autocallables, forward starts)
        hedge_model: Model the desk prices and computes deltas with
        realized_model: Model the world paths follow
        market: Market of the hedge model
        config: Monte Carlo settings of the inception price (seed shared)
        rebalance_every_step: Rebalance at every world step, else hold the inception delta
        kappa: Weight of the loss uncertainty
        realized_market: Market of the world paths (defaults to ``market``)
        world_paths: Number of world paths
        steps_per_year: Rebalancing frequency
        inner_paths: Paths per ladder level in the delta surfaces
        ladder_size: Spot levels per delta surface
        delta_refresh_per_year: Coarser delta schedule; None recomputes the
            delta at every rebalance date
        position: Side of the desk, short by default

    Raises:
        ValueError: Negative kappa
    """
    if kappa < 0.0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    position = Position(position)
    realized_market = realized_market or market
    fixing = product.reference if product.reference is not None else market.spot
    product = product.with_reference(fixing)
    expiry = product.horizon

    if world_paths > settings.hedge_warn_paths:
        logger.warning(
            f"hedging simulation with {world_paths} world paths exceeds {settings.hedge_warn_paths}; "
            f"expect a long run"
        )

    hedge_model = prepare_model(hedge_model, market, expiry, config)
    realized_model = prepare_model(realized_model, realized_market, expiry, config)
    world_config = McConfig(
        world_paths, steps_per_year=steps_per_year, seed=config.seed,
        antithetic=config.antithetic, threads=config.threads,
    )
    inner_config = McConfig(
        inner_paths, steps_per_year=config.steps_per_year, seed=(config.seed + 1) % 2 ** 64,
        antithetic=config.antithetic, threads=config.threads,
    )

    inception = price_pathwise(product, hedge_model, market, config)
    p0 = float(np.mean(inception))
    p0_error = standard_error(inception, config.antithetic)

    world = simulate_paths(
        realized_model, realized_market, expiry, world_config, event_times=product.event_times, record_all=True
    )
    discount = 1.0 / np.asarray(world.bank)
    carry_df = np.asarray(realized_market.equity.carry_curve.discount_factor(world.times))
    carry_growth = carry_df[:-1] / carry_df[1:]

    ladder_vol = max(
        float(market.surface.implied_vol(expiry, 1.0)),
        float(realized_market.surface.implied_vol(expiry, 1.0)),
    )
    table_fixing = _table_fixing(product, fixing, market)
    dates = delta_dates(world.times, expiry, rebalance_every_step, delta_refresh_per_year)
    surfaces = delta_surfaces(
        product, table_fixing, hedge_model, market, inner_config, dates, ladder_size, ladder_vol
    )
    book = _WorldBook(product, world, fixing, table_fixing)
    gains, inception_delta = _hedge_gains(book, surfaces, discount, carry_growth, rebalance_every_step)

    flows = discounted_cashflows(product, world, fixing)
    short_pnl = p0 - flows + gains
    pnl = short_pnl if position is Position.SHORT else -short_pnl
    pnl_error = math.sqrt(standard_error(pnl, world_config.antithetic) ** 2 + p0_error ** 2)

    loss = -pnl
    expected_loss = float(np.mean(loss))
    tail_loss = float(np.quantile(loss, LOSS_QUANTILE))
    amount = max(0.0, expected_loss) + kappa * max(0.0, tail_loss - expected_loss)

    logger.info(
        f"hedging_simulation {product.family} {hedge_model.identifier} vs {realized_model.identifier}: "
        f"mean P&L {-expected_loss * 1e4:.4f} bp (se {pnl_error * 1e4:.4f}), amount {amount * 1e4:.4f} bp, "
        f"{len(dates)} delta dates"
    )
    component = FvaComponent(
        method=FvaMethod.HEDGING_SIMULATION,
        amount=amount,
        std_error=pnl_error,
        diagnostics={
            "position": position.value,
            "hedge_model": hedge_model.identifier,
            "realized_model": realized_model.identifier,
            "inception_price": p0,
            "inception_std_error": p0_error,
            "mean_pnl": -expected_loss,
            "expected_loss": expected_loss,
            "loss_p95": tail_loss,
            "kappa": kappa,
            "world_paths": world_paths,
            "steps_per_year": steps_per_year,
            "rebalance_every_step": rebalance_every_step,
            "delta_dates": len(dates),
            "mean_inception_delta": float(np.mean(inception_delta)),
        },
    )
    return HedgingResult(component=component, pnl=pnl)
