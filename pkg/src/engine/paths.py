"""
Path simulation under LV and HWLV.

Spot: log-Euler with the deterministic forward drift; LV diffuses with the
Dupire local vol grid, HWLV with the leverage grid and adds the stochastic
part of the short rate. Short rate: exact Ornstein-Uhlenbeck update.
Money-market account: trapezoidal integral of the stochastic part, exact
integral of the deterministic shift.

Every path draws its normals from its own counter-based Philox stream keyed
by the seed, so output does not depend on how paths are split into chunks or
threads. With antithetic sampling, path 2i+1 uses the negated draws of 2i.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..market_data.curves import log_forward
from ..market_data.snapshot import MarketSnapshot
from .errors import ConfigurationError, GridMisalignmentError, HorizonMismatchError
from .models import TIME_TOLERANCE, McConfig, ModelSpec, PathSet, VolGrid

logger = logging.getLogger(__name__)

CHUNK_PATHS = 4096
N_FACTORS = 2


# ============== Random streams ==============

def path_normals(seed: int, start: int, stop: int, n_steps: int, antithetic: bool) -> np.ndarray:
    """
    Standard normals for paths [start, stop), shape (stop - start, n_steps, 2).

    Factor 0 drives the equity, factor 1 the independent part of the rate.
    """
    out = np.empty((stop - start, n_steps, N_FACTORS))
    cached_stream = -1
    draws = None
    for i, p in enumerate(range(start, stop)):
        stream = p // 2 if antithetic else p
        if stream != cached_stream:
            bit_gen = np.random.Philox(key=seed, counter=stream << 128)
            draws = np.random.Generator(bit_gen).standard_normal((n_steps, N_FACTORS))
            cached_stream = stream
        out[i] = -draws if (antithetic and p % 2 == 1) else draws
    return out


# ============== Time grid ==============

def build_time_grid(horizon: float, steps_per_year: int, extra_times: Iterable[float] = ()) -> np.ndarray:
    """Uniform steps of 1/steps_per_year up to the horizon, merged with event times."""
    if horizon <= 0.0:
        raise ConfigurationError(f"horizon must be > 0, got {horizon}")
    dt = 1.0 / steps_per_year
    n = int(math.floor(horizon * steps_per_year + TIME_TOLERANCE))
    grid = [k * dt for k in range(n + 1)]
    if horizon - grid[-1] > TIME_TOLERANCE:
        grid.append(horizon)

    for t in extra_times:
        if t < -TIME_TOLERANCE or t > horizon + TIME_TOLERANCE:
            raise HorizonMismatchError(f"event time {t} outside [0, {horizon}]")
        nearest = min(grid, key=lambda g: abs(g - t))
        if abs(nearest - t) > TIME_TOLERANCE:
            grid.append(float(t))
    return np.array(sorted(grid))


# ============== Simulation ==============

class _Stepper:
    """Precomputed per-step coefficients shared by all chunks."""

    def __init__(
        self,
        model: ModelSpec,
        market: MarketSnapshot,
        grid: np.ndarray,
        vol_grid: VolGrid,
        record_mask: np.ndarray,
    ):
        self.model = model
        self.market = market
        self.grid = grid
        self.vol_grid = vol_grid
        self.record_mask = record_mask
        self.dt = np.diff(grid)
        self.sqrt_dt = np.sqrt(self.dt)
        self.log_fwd = np.asarray(log_forward(market.equity, market.discount, grid))
        self.fwd_drift = np.diff(self.log_fwd)
        self.vol_rows = [vol_grid.row(float(t)) for t in grid[:-1]]

        self.hybrid = model.is_hybrid
        if self.hybrid:
            hw = model.hw
            self.rho = model.equity_rate_correlation
            self.rho_perp = math.sqrt(max(0.0, 1.0 - self.rho * self.rho))
            self.ou = [hw.ou_step(float(h)) for h in self.dt]
            log_df = -np.asarray(market.discount.integrated_rate(grid))
            self.convexity = hw.phi_convexity_integral(grid[:-1], grid[1:])
            self.det_rate_int = (log_df[:-1] - log_df[1:]) + self.convexity
            self.phi = np.asarray(hw.phi(market.discount, grid))

    def run(
        self,
        normals: np.ndarray,
        start: int = 0,
        spot0: Optional[np.ndarray] = None,
        repeat: int = 1,
        record_mask: Optional[np.ndarray] = None,
    ) -> Tuple[np.ndarray, Optional[np.ndarray], Optional[np.ndarray]]:
        """
        Step the paths from grid index ``start`` to the end of the grid.

        ``normals`` are indexed by absolute step; with ``repeat`` > 1 every
        block of len(normals) paths reuses the same draws. ``record_mask``
        replaces the stepper's own for this run.
        """
        mask = self.record_mask if record_mask is None else record_mask
        n = normals.shape[0] * repeat
        columns = [i for i in range(start, len(self.grid)) if mask[i]]
        spot_rec = np.empty((n, len(columns)))
        bank_rec = np.empty((n, len(columns))) if self.hybrid else None
        rate_rec = np.empty((n, len(columns))) if self.hybrid else None

        if spot0 is None:
            log_s = np.full(n, math.log(self.market.spot))
        else:
            log_s = np.log(np.asarray(spot0, dtype=float))
        x = np.zeros(n)
        log_bank = np.zeros(n)
        k_moneyness = self.vol_grid._k

        col = 0
        if mask[start]:
            spot_rec[:, col] = np.exp(log_s)
            if self.hybrid:
                bank_rec[:, col] = 1.0
                rate_rec[:, col] = self.phi[start]
            col += 1

        for step in range(start, len(self.dt)):
            dt = self.dt[step]
            draws = normals[:, step, :]
            if repeat > 1:
                draws = np.tile(draws, (repeat, 1))
            z_s = draws[:, 0]
            moneyness = np.exp(log_s - self.log_fwd[step])
            vol = np.interp(moneyness, k_moneyness, self.vol_rows[step])

            increment = self.fwd_drift[step] - 0.5 * vol * vol * dt + vol * self.sqrt_dt[step] * z_s
            if self.hybrid:
                decay, std = self.ou[step]
                z_r = self.rho * z_s + self.rho_perp * draws[:, 1]
                x_next = x * decay + std * z_r
                stoch_int = 0.5 * (x + x_next) * dt
                # zero-vol rates add exact zeros, keeping LV paths bit-identical
                increment = increment + self.convexity[step] + stoch_int
                log_bank = log_bank + self.det_rate_int[step] + stoch_int
                x = x_next
            log_s = log_s + increment

            if mask[step + 1]:
                spot_rec[:, col] = np.exp(log_s)
                if self.hybrid:
                    bank_rec[:, col] = np.exp(log_bank)
                    rate_rec[:, col] = x + self.phi[step + 1]
                col += 1

        return spot_rec, bank_rec, rate_rec


def _diffusion(model: ModelSpec, market: MarketSnapshot, horizon: float, vol_grid: Optional[VolGrid]) -> VolGrid:
    from .leverage import local_vol_surface

    if model.is_hybrid:
        if model.leverage is None:
            raise ConfigurationError("HWLV simulation requires a calibrated leverage surface")
        if model.leverage.horizon + TIME_TOLERANCE < horizon:
            raise HorizonMismatchError(
                f"leverage calibrated to {model.leverage.horizon}y, simulation needs {horizon}y"
            )
        return model.leverage
    return vol_grid if vol_grid is not None else local_vol_surface(market, horizon)


def simulate_paths(
    model: ModelSpec,
    market: MarketSnapshot,
    horizon: float,
    config: McConfig,
    vol_grid: Optional[VolGrid] = None,
    event_times: Sequence[float] = (),
    record_all: bool = False,
) -> PathSet:
    """
    Simulate spot (and rate) paths to ``horizon``.

    Args:
        model: LV or HWLV spec; HWLV must carry its leverage
        market: Snapshot supplying curves and the vol surface
        horizon: Last simulated time in years
        config: Paths, step density, seed, antithetic flag, threads
        vol_grid: LV local-vol grid (computed from the market when omitted)
        event_times: Times that must lie on the grid and be recorded
        record_all: Record every grid time instead of only event times

    Raises:
        ConfigurationError: HWLV without leverage, or bad horizon
        HorizonMismatchError: Event times beyond the horizon or leverage
    """
    diffusion = _diffusion(model, market, horizon, vol_grid)
    grid = build_time_grid(horizon, config.steps_per_year, event_times)
    if record_all:
        record_mask = np.ones(len(grid), dtype=bool)
    else:
        wanted = list(event_times) + [0.0, horizon]
        record_mask = np.array([any(abs(t - w) <= TIME_TOLERANCE for w in wanted) for t in grid])
    stepper = _Stepper(model, market, grid, diffusion, record_mask)

    n_steps = len(grid) - 1
    chunks: List[Tuple[int, int]] = [
        (start, min(start + CHUNK_PATHS, config.n_paths)) for start in range(0, config.n_paths, CHUNK_PATHS)
    ]

    def run_chunk(bounds: Tuple[int, int]):
        start, stop = bounds
        normals = path_normals(config.seed, start, stop, n_steps, config.antithetic)
        return stepper.run(normals)

    if config.threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(run_chunk, chunks))
    else:
        results = [run_chunk(c) for c in chunks]

    spot = np.concatenate([r[0] for r in results])
    times = grid[record_mask]
    if model.is_hybrid:
        bank = np.concatenate([r[1] for r in results])
        short_rate = np.concatenate([r[2] for r in results])
    else:
        growth = 1.0 / np.asarray(market.discount.discount_factor(times))
        bank = np.broadcast_to(growth, spot.shape)
        short_rate = None

    logger.debug(
        f"Simulated {config.n_paths} {model.kind.value} paths, {n_steps} steps to {horizon}y "
        f"({len(chunks)} chunks, {config.threads} threads)"
    )
    return PathSet(times=times, spot=spot, bank=bank, short_rate=short_rate, model=model, market=market)


class RestartSimulator:
    """
    Paths restarted at a grid date from arbitrary spot levels.

    The short-rate state restarts on the initial curve (x = 0). One block of
    normals is drawn for the whole grid and shared by every restart date and
    every starting level, so differences across levels use common numbers.
    """

    def __init__(
        self,
        model: ModelSpec,
        market: MarketSnapshot,
        horizon: float,
        config: McConfig,
        restart_times: Sequence[float] = (),
        event_times: Sequence[float] = (),
    ):
        diffusion = _diffusion(model, market, horizon, None)
        self.grid = build_time_grid(horizon, config.steps_per_year, tuple(restart_times) + tuple(event_times))
        self.model = model
        self.market = market
        self.n_paths = config.n_paths
        self._events = np.array([any(abs(t - e) <= TIME_TOLERANCE for e in event_times) for t in self.grid])
        self._events[-1] = True
        self._stepper = _Stepper(model, market, self.grid, diffusion, self._events)
        self._normals = path_normals(config.seed, 0, config.n_paths, len(self.grid) - 1, config.antithetic)

    def paths(self, start: float, spot0: np.ndarray) -> PathSet:
        """
        Paths from ``start``, recorded at ``start`` and at the later event times.

        ``spot0`` holds n_paths starting spots per level, level-major. The
        result has ``origin`` = start, so discount factors run back to it.

        Raises:
            GridMisalignmentError: ``start`` is not a grid date
            ConfigurationError: ``spot0`` is not a whole number of path blocks
        """
        j = int(np.argmin(np.abs(self.grid - start)))
        if abs(self.grid[j] - start) > TIME_TOLERANCE:
            raise GridMisalignmentError(f"restart time {start} is not on the simulation grid")
        spot0 = np.asarray(spot0, dtype=float)
        if spot0.size % self.n_paths:
            raise ConfigurationError("starting spots must be a whole number of path blocks")

        mask = self._events.copy()
        mask[j] = True
        spot, bank, rate = self._stepper.run(
            self._normals, start=j, spot0=spot0, repeat=spot0.size // self.n_paths, record_mask=mask
        )
        times = self.grid[j:][mask[j:]]
        if not self.model.is_hybrid:
            bank = np.broadcast_to(1.0 / np.asarray(self.market.discount.discount_factor(times)), spot.shape)
        return PathSet(
            times=times, spot=spot, bank=bank, short_rate=rate,
            model=self.model, market=self.market, origin=float(self.grid[j]),
        )
