import json
import math
from datetime import date

import numpy as np
import pytest

from src.market_data import (
    DiscountCurve,
    DomainError,
    EquityForwardInputs,
    ImpliedVolSurface,
    InvariantViolationError,
    MarketSnapshot,
    SnapshotNotFoundError,
    SnapshotParseError,
    discount_factor,
    dupire_local_vol,
    forward_price,
    implied_vol,
    load_snapshot,
    write_snapshot,
)


# ============== Curves ==============

def test_discount_factor_identity_and_flat_curve():
    curve = DiscountCurve.flat(0.02)
    assert discount_factor(curve, 0.0) == 1.0
    assert discount_factor(curve, 5.0) == pytest.approx(math.exp(-0.10), abs=1e-12)


def test_discount_factor_interpolates_in_zt():
    curve = DiscountCurve((1.0, 3.0), (0.01, 0.03))
    # z*t runs from 0.01 at 1y to 0.09 at 3y
    expected = math.exp(-(0.01 + 0.5 * (0.09 - 0.01)))
    assert discount_factor(curve, 2.0) == pytest.approx(expected, abs=1e-14)


def test_discount_factor_reproduces_pillars_and_extrapolates_flat():
    curve = DiscountCurve((1.0, 3.0, 10.0), (0.01, 0.03, 0.025))
    for t, z in zip(curve.pillar_times, curve.zero_rates):
        assert discount_factor(curve, t) == pytest.approx(math.exp(-z * t), rel=1e-15)
    assert discount_factor(curve, 20.0) == pytest.approx(math.exp(-0.025 * 20.0), rel=1e-14)


def test_negative_time_is_a_domain_error():
    with pytest.raises(DomainError):
        discount_factor(DiscountCurve.flat(0.01), -0.5)
    eq = EquityForwardInputs(100.0, DiscountCurve.flat(0.0))
    with pytest.raises(DomainError):
        forward_price(eq, DiscountCurve.flat(0.01), -1.0)


def test_forward_price():
    eq = EquityForwardInputs(100.0, DiscountCurve.flat(0.0))
    rates = DiscountCurve.flat(0.01)
    assert forward_price(eq, rates, 0.0) == 100.0
    assert forward_price(eq, rates, 1.0) == pytest.approx(100.0 * math.exp(0.01), rel=1e-14)


def test_forward_price_nonflat_curves():
    rates = DiscountCurve((1.0, 4.0), (0.02, 0.03))
    carry = DiscountCurve((2.0,), (0.015,))
    eq = EquityForwardInputs(50.0, carry)
    # z*t for rates at 2y: 0.02 + (0.12 - 0.02) / 3; carry flat at 1.5%
    expected = 50.0 * math.exp(0.02 + 0.1 / 3.0 - 0.015 * 2.0)
    assert forward_price(eq, rates, 2.0) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("times, rates", [
    ((), ()),
    ((1.0, 1.0), (0.01, 0.02)),
    ((0.0,), (0.01,)),
    ((1.0,), (float("nan"),)),
])
def test_bad_curves_are_rejected(times, rates):
    with pytest.raises(InvariantViolationError):
        DiscountCurve(times, rates)


# ============== Implied vol ==============

def test_flat_surface_returns_flat_vol():
    surface = ImpliedVolSurface.flat(0.2)
    for t, k in [(0.1, 0.3), (1.0, 1.0), (7.5, 2.0), (30.0, 5.0)]:
        assert implied_vol(surface, t, k) == pytest.approx(0.2, abs=1e-15)


def skewed_surface() -> ImpliedVolSurface:
    return ImpliedVolSurface(
        expiries=(1.0, 2.0),
        moneyness=(0.5, 1.0, 1.5),
        vols=((0.30, 0.20, 0.18), (0.28, 0.21, 0.19)),
    )


def test_grid_nodes_are_reproduced_exactly():
    surface = skewed_surface()
    for i, t in enumerate(surface.expiries):
        for j, k in enumerate(surface.moneyness):
            assert implied_vol(surface, t, k) == surface.vols[i][j]


def test_mid_cell_interpolation():
    surface = skewed_surface()
    # variance linear in k on each row, then total variance linear in t
    var_1 = 0.5 * (0.30 ** 2 + 0.20 ** 2)
    var_2 = 0.5 * (0.28 ** 2 + 0.21 ** 2)
    total = 0.5 * (var_1 * 1.0 + var_2 * 2.0)
    assert implied_vol(surface, 1.5, 0.75) == pytest.approx(math.sqrt(total / 1.5), rel=1e-12)


def test_flat_extrapolation_outside_grid():
    surface = skewed_surface()
    assert implied_vol(surface, 0.25, 0.1) == pytest.approx(0.30, abs=1e-15)
    assert implied_vol(surface, 9.0, 3.0) == pytest.approx(0.19, abs=1e-15)


def test_implied_vol_domain():
    with pytest.raises(DomainError):
        implied_vol(ImpliedVolSurface.flat(0.2), 0.0, 1.0)
    with pytest.raises(DomainError):
        implied_vol(ImpliedVolSurface.flat(0.2), 1.0, -1.0)


def test_calendar_arbitrage_is_rejected():
    with pytest.raises(InvariantViolationError) as exc:
        ImpliedVolSurface((1.0, 2.0), (0.5, 1.0, 1.5), ((0.3, 0.3, 0.3), (0.3, 0.2, 0.3)))
    assert exc.value.invariant == "calendar_arbitrage"


def test_narrow_moneyness_span_is_rejected():
    with pytest.raises(InvariantViolationError) as exc:
        ImpliedVolSurface((1.0,), (0.8, 1.0, 1.2), ((0.2, 0.2, 0.2),))
    assert exc.value.invariant == "moneyness_span"


# ============== Dupire ==============

def test_dupire_on_flat_surface(market):
    for t in (0.3, 1.0, 4.0):
        for s in (60.0, 100.0, 140.0):
            lv = dupire_local_vol(market.surface, market.equity, market.discount, t, s)
            assert lv == pytest.approx(0.20, abs=1e-6)


def test_dupire_linear_total_variance_in_time():
    # w(1) = 0.04, w(2) = 0.09 at every strike: dw/dT = 0.05 in between
    vol_2 = math.sqrt(0.09 / 2.0)
    surface = ImpliedVolSurface((1.0, 2.0), (0.5, 1.0, 1.5), ((0.2, 0.2, 0.2), (vol_2, vol_2, vol_2)))
    eq = EquityForwardInputs(100.0, DiscountCurve.flat(0.0))
    lv = dupire_local_vol(surface, eq, DiscountCurve.flat(0.01), 1.5, np.array([80.0, 100.0, 120.0]))
    np.testing.assert_allclose(lv, math.sqrt(0.05), rtol=1e-9)


def test_dupire_is_floored_and_capped(market):
    lv = dupire_local_vol(market.surface, market.equity, market.discount, 1.0, np.array([1e-3, 1e5]))
    assert np.all(lv >= 1e-3) and np.all(lv <= 5.0)


def test_dupire_falls_back_to_implied_vol_where_the_surface_has_arbitrage():
    # variance peaks at the forward: the Dupire denominator turns negative there
    surface = ImpliedVolSurface((1.0, 2.0), (0.5, 1.0, 1.5), ((0.05, 0.8, 0.05), (0.05, 0.8, 0.05)))
    eq = EquityForwardInputs(100.0, DiscountCurve.flat(0.0))
    lv = dupire_local_vol(surface, eq, DiscountCurve.flat(0.0), 1.5, 100.0)
    assert lv == pytest.approx(0.8, rel=1e-9)


def test_dupire_domain(market):
    with pytest.raises(DomainError):
        dupire_local_vol(market.surface, market.equity, market.discount, 0.0, 100.0)


# ============== Snapshots ==============

def test_shipped_snapshot_loads(data_dir):
    snap = load_snapshot(data_dir / "snapshot.json")
    assert snap.spot == 100.0
    assert snap.equity_rate_correlation == pytest.approx(0.3)
    assert "synthetic" in snap.label


def test_snapshot_round_trip_is_exact(tmp_path, data_dir):
    snap = load_snapshot(data_dir / "snapshot.json")
    write_snapshot(snap, tmp_path / "copy.json")
    again = load_snapshot(tmp_path / "copy.json")
    assert again == snap
    assert again.surface.vols == snap.surface.vols
    assert again.discount.zero_rates == snap.discount.zero_rates


def test_snapshot_errors_are_distinct(tmp_path, data_dir):
    with pytest.raises(SnapshotNotFoundError):
        load_snapshot(tmp_path / "missing.json")

    (tmp_path / "broken.json").write_text("{not json", encoding="utf-8")
    with pytest.raises(SnapshotParseError):
        load_snapshot(tmp_path / "broken.json")

    raw = json.loads((data_dir / "snapshot.json").read_text(encoding="utf-8"))
    raw["equity_rate_correlation"] = 1.5
    (tmp_path / "rho.json").write_text(json.dumps(raw), encoding="utf-8")
    with pytest.raises(InvariantViolationError) as exc:
        load_snapshot(tmp_path / "rho.json")
    assert exc.value.invariant == "correlation_range"


def test_snapshot_with_calendar_arbitrage_is_rejected(tmp_path, data_dir):
    raw = json.loads((data_dir / "snapshot.json").read_text(encoding="utf-8"))
    n_k = len(raw["surface"]["moneyness"])
    # second expiry row far below the first one
    raw["surface"]["vols"][n_k:2 * n_k] = [0.01] * n_k
    (tmp_path / "calendar.json").write_text(json.dumps(raw), encoding="utf-8")
    with pytest.raises(InvariantViolationError) as exc:
        load_snapshot(tmp_path / "calendar.json")
    assert exc.value.invariant == "calendar_arbitrage"


def test_snapshot_copy_constructors(market):
    assert market.bump_spot(1.01).spot == pytest.approx(101.0)
    assert implied_vol(market.shift_vols(0.01).surface, 1.0, 1.0) == pytest.approx(0.21)
    assert market.with_flat_carry(0.02).equity.carry_curve.zero_rate(3.0) == pytest.approx(0.02)
    assert market.with_correlation(-0.4).equity_rate_correlation == -0.4
    with pytest.raises(InvariantViolationError):
        MarketSnapshot(date(2026, 1, 1), market.discount, market.equity, market.surface, 1.2)
