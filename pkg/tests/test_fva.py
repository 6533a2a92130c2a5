import json
import math

import numpy as np
import pytest

from src.config import settings
from src.engine import McConfig, ModelSpec, bs_price, bs_vega, price
from src.fva import (
    FvaComponent,
    FvaMethod,
    FvaMode,
    InsufficientSamplesError,
    ParameterSample,
    Position,
    UnknownParameterError,
    UnsupportedModeError,
    build_report,
    delta_dates,
    fva_calibration_variation,
    fva_conservative_set,
    fva_hedging_simulation,
    fva_model_comparison,
    fva_parameter_range,
    fva_sensitivity_multiple,
    load_samples,
    report_markdown,
)
from src.products import Autocallable, VanillaOption, load_product
from tests.conftest import flat_market

SLOPE = 0.02


def linear_pricer(model, market):
    """Price moves by SLOPE per unit of equity-rate correlation."""
    return np.full(64, 0.10 + SLOPE * market.equity_rate_correlation)


@pytest.fixture
def put() -> VanillaOption:
    return VanillaOption(strike=1.0, expiry=1.0)


# ============== Parameter range ==============

def test_parameter_range_with_linear_pricer(put, mc):
    market = flat_market(correlation=0.3)
    sample = ParameterSample("equity_rate_correlation", (0.1, 0.2, 0.3, 0.35, 0.4))
    # linear quantiles: q05 = 0.12, q95 = 0.39
    long = fva_parameter_range(put, ModelSpec.lv(), market, sample, mc, pricer=linear_pricer)
    assert long.amount == pytest.approx(SLOPE * (0.3 - 0.12), abs=1e-12)
    assert long.conservative_value == pytest.approx(0.12)
    assert long.diagnostics["q_hi"] == pytest.approx(0.39)

    short = fva_parameter_range(
        put, ModelSpec.lv(), market, sample, mc, position=Position.SHORT, pricer=linear_pricer
    )
    assert short.amount == pytest.approx(SLOPE * (0.39 - 0.3), abs=1e-12)
    assert short.conservative_value == pytest.approx(0.39)


@pytest.mark.parametrize("value", [0.3, 0.1, 0.5])
def test_collapsed_distribution_gives_zero(put, mc, value):
    # mark is 0.3; a collapsed sample away from it still has no range
    market = flat_market(correlation=0.3)
    sample = ParameterSample("equity_rate_correlation", (value, value, value))
    for position in Position:
        component = fva_parameter_range(
            put, ModelSpec.lv(), market, sample, mc, position=position, pricer=linear_pricer
        )
        assert component.amount == 0.0
        assert component.std_error == 0.0
        assert component.diagnostics["collapsed"] is True


def test_shrinking_the_distribution_never_raises_the_amount(put, mc):
    market = flat_market(correlation=0.0)
    sample = ParameterSample("equity_rate_correlation", (-0.5, -0.2, 0.1, 0.3, 0.6, 0.7))
    amounts = [
        fva_parameter_range(put, ModelSpec.lv(), market, sample.shrunk(f), mc, pricer=linear_pricer).amount
        for f in (1.0, 0.75, 0.5, 0.25, 0.0)
    ]
    assert all(a >= 0.0 for a in amounts)
    assert amounts == sorted(amounts, reverse=True)


def test_parameter_range_with_monte_carlo(put, market, mc):
    sample = ParameterSample("dividend_yield", (-0.01, 0.0, 0.01, 0.02))
    first = fva_parameter_range(put, ModelSpec.lv(), market, sample, mc)
    second = fva_parameter_range(put, ModelSpec.lv(), market, sample, mc)
    assert first.amount > 0.0
    assert first.amount == second.amount
    # a long put loses when carry falls
    assert first.conservative_value == pytest.approx(first.diagnostics["q_lo"])
    assert first.diagnostics["price_q_lo"] < first.diagnostics["base_price"]


def test_bad_percentiles(put, market, mc):
    sample = ParameterSample("dividend_yield", (0.0, 0.01))
    with pytest.raises(ValueError):
        fva_parameter_range(put, ModelSpec.lv(), market, sample, mc, p_lo=0.9, p_hi=0.1, pricer=linear_pricer)


def test_hybrid_only_parameter_under_lv(put, market, mc):
    sample = ParameterSample("rate_vol", (0.005, 0.01))
    with pytest.raises(UnknownParameterError):
        fva_parameter_range(put, ModelSpec.lv(), market, sample, mc, pricer=linear_pricer)


def test_parameter_sample_errors():
    with pytest.raises(UnknownParameterError):
        ParameterSample("volvol", (0.1, 0.2))
    with pytest.raises(InsufficientSamplesError):
        ParameterSample("dividend_yield", (0.01,))
    with pytest.raises(InsufficientSamplesError):
        ParameterSample("dividend_yield", (0.01, float("nan")))


def test_shipped_correlation_samples_load(data_dir):
    sample = load_samples("equity_rate_correlation", data_dir / "correlation_samples.csv")
    assert len(sample.samples) >= 2
    assert all(-1.0 <= v <= 1.0 for v in sample.samples)
    lo, hi = sample.quantiles(0.05, 0.95)
    assert lo <= hi


def test_samples_from_json(tmp_path):
    path = tmp_path / "div.json"
    path.write_text(json.dumps([0.01, 0.02, 0.03]), encoding="utf-8")
    assert load_samples("dividend_yield", path).samples == (0.01, 0.02, 0.03)
    with pytest.raises(InsufficientSamplesError):
        load_samples("dividend_yield", tmp_path / "missing.csv")


# ============== Sensitivity multiple and conservative set ==============

def test_zero_multiple_gives_zero(put, market, mc):
    component = fva_sensitivity_multiple(put, ModelSpec.lv(), market, "dividend_yield", 0.0, mc)
    assert component.amount == 0.0


def test_amount_is_linear_in_the_multiple(put, market, mc):
    one = fva_sensitivity_multiple(put, ModelSpec.lv(), market, "dividend_yield", 1.5, mc)
    two = fva_sensitivity_multiple(put, ModelSpec.lv(), market, "dividend_yield", 3.0, mc)
    assert one.amount > 0.0
    assert two.amount == 2.0 * one.amount


def test_negative_multiple(put, market, mc):
    with pytest.raises(ValueError):
        fva_sensitivity_multiple(put, ModelSpec.lv(), market, "dividend_yield", -1.0, mc)


def test_vega_multiple_matches_black_scholes(put, market):
    config = McConfig(n_paths=40_000, steps_per_year=12, seed=31)
    component = fva_sensitivity_multiple(put, ModelSpec.lv(), market, "vol_shift", 1.0, config, bump=0.01)
    oracle = bs_vega(1.0, 1.0, 1.0, 0.01, 0.0, 0.2) * 0.01
    assert component.amount == pytest.approx(oracle, abs=3.0 * component.std_error + 5e-5)
    # a long put loses when vols fall
    assert component.conservative_value == pytest.approx(-0.01)


def test_amount_is_stable_under_a_small_spot_move(put, market, mc):
    fixed = put.with_reference(market.spot)
    base = fva_sensitivity_multiple(fixed, ModelSpec.lv(), market, "vol_shift", 1.0, mc)
    moved = fva_sensitivity_multiple(fixed, ModelSpec.lv(), market.bump_spot(1.01), "vol_shift", 1.0, mc)
    assert abs(moved.amount - base.amount) < 0.25 * base.amount


def test_conservative_set_picks_the_worst_value(put, mc):
    market = flat_market(correlation=0.3)
    component = fva_conservative_set(
        put, ModelSpec.lv(), market, "equity_rate_correlation", [0.5, 0.0, 0.2], mc, pricer=linear_pricer
    )
    assert component.amount == pytest.approx(SLOPE * 0.3, abs=1e-12)
    assert component.conservative_value == 0.0


# ============== Calibration variation ==============

def test_calibration_variation_needs_two_variants(put, market, mc):
    with pytest.raises(InsufficientSamplesError):
        fva_calibration_variation(put, ModelSpec.lv(), [market], mc)


def test_identical_variants_give_zero(put, market, mc):
    component = fva_calibration_variation(put, ModelSpec.lv(), [market, flat_market()], mc)
    assert component.amount == 0.0


def test_vol_variants_match_black_scholes_spread(put, mc):
    low, high = flat_market(vol=0.19), flat_market(vol=0.21)
    component = fva_calibration_variation(put, ModelSpec.lv(), [low, high], mc)
    oracle = bs_price(1.0, 1.0, 1.0, 0.01, 0.0, 0.21, False) - bs_price(1.0, 1.0, 1.0, 0.01, 0.0, 0.19, False)
    assert component.amount == pytest.approx(oracle, abs=3.0 * component.std_error + 1e-4)
    assert component.conservative_value == low.label


def test_parameter_set_variants(put, market, mc):
    variants = [{"vol_shift": -0.01}, {"vol_shift": 0.0}, {"vol_shift": 0.01}]
    component = fva_calibration_variation(put, ModelSpec.lv(), variants, mc, market=market)
    assert component.amount > 0.0
    assert component.diagnostics["variants"][0] == "vol_shift=-0.01"


def test_rate_vol_variants_on_the_autocallable(market):
    note = Autocallable(observation_dates=(1.0, 2.0, 3.0))
    model = ModelSpec.hwlv(0.05, 0.008, 0.3, leverage_mode="reuse")
    config = McConfig(n_paths=4_000, steps_per_year=24, seed=3)
    variants = [{"rate_vol": 0.004}, {"rate_vol": 0.008}, {"rate_vol": 0.012}]
    first = fva_calibration_variation(note, model, variants, config, market=market)
    second = fva_calibration_variation(note, model, variants, config, market=market)
    prices = first.diagnostics["prices"]
    assert all(first.amount >= abs(a - b) for a in prices for b in prices)
    assert first.amount == second.amount


# ============== Model comparison ==============

def test_model_against_itself_gives_a_zero_grid(put, market, mc):
    grid, component = fva_model_comparison(
        put, market, ModelSpec.lv(), ModelSpec.lv(), tenors=(1.0, 2.0), correlations=(-0.5, 0.5), config=mc
    )
    assert np.all(grid.values == 0.0)
    assert component.amount == 0.0
    frame = grid.to_frame()
    assert list(frame.columns) == ["-0.5", "0.5"]
    assert list(frame.index) == [1.0, 2.0]


def test_zero_rate_vol_hybrid_matches_lv_on_the_grid(put, market, mc):
    grid, component = fva_model_comparison(
        put, market, ModelSpec.lv(), ModelSpec.hwlv(0.05, 0.0, 0.0),
        tenors=(1.0, 2.0), correlations=(-0.5, 0.5), config=mc,
    )
    np.testing.assert_allclose(grid.values, 0.0, atol=1e-12)
    assert component.amount <= 1e-12


@pytest.fixture
def autocallable(data_dir):
    product, _ = load_product(data_dir / "autocallable.json")
    return product


SMALL_MC = McConfig(n_paths=2_000, steps_per_year=12, seed=42)


def test_zero_rate_vol_hybrid_matches_lv_on_the_shipped_grid(snapshot, autocallable):
    grid, _ = fva_model_comparison(
        autocallable, snapshot, ModelSpec.lv(), ModelSpec.hwlv(0.05, 0.0, 0.0),
        tenors=(1.0, 5.0), correlations=(-0.3, 0.6), config=SMALL_MC,
    )
    np.testing.assert_allclose(grid.values, 0.0, atol=1e-12)


def test_one_cell_grid_is_the_price_difference(snapshot, autocallable):
    hwlv = ModelSpec.hwlv(0.05, 0.008, 0.3)
    grid, _ = fva_model_comparison(
        autocallable, snapshot, ModelSpec.lv(), hwlv, tenors=(5.0,), correlations=(0.3,), config=SMALL_MC
    )
    lv = price(autocallable, ModelSpec.lv(), snapshot, SMALL_MC)
    hw = price(autocallable, hwlv, snapshot, SMALL_MC)
    assert grid.values.shape == (1, 1)
    assert grid.values[0, 0] == pytest.approx(hw.value - lv.value, abs=1e-12)


@pytest.mark.slow
def test_correlation_range_grows_with_the_tenor(snapshot, autocallable, data_dir):
    config = McConfig(n_paths=20_000, steps_per_year=48, seed=42)
    samples = load_samples("equity_rate_correlation", data_dir / "correlation_samples.csv")
    model = ModelSpec.hwlv(0.05, 0.008, 0.3)
    short, long = (
        fva_parameter_range(autocallable.rescale(tenor), model, snapshot, samples, config)
        for tenor in (1.0, 5.0)
    )
    assert short.amount <= long.amount + 2.0 * math.hypot(short.std_error, long.std_error)


# ============== Report ==============

def component(amount_bp: float, method=FvaMethod.PARAMETER_RANGE, parameter=None, conservative=None):
    return FvaComponent(
        method=method, amount=amount_bp * 1e-4, parameter=parameter, conservative_value=conservative
    )


def test_empty_report():
    report = build_report([])
    assert report.total == 0.0 and report.coverage == 0.0


def test_external_components_add_up():
    report = build_report([component(30.0, parameter="dividend_yield"), component(50.0, parameter="vol_shift")])
    assert report.total_bp == pytest.approx(80.0)
    assert report.coverage == report.total


def test_embedded_component_is_booked_not_added():
    rng = component(30.0, parameter="equity_rate_correlation", conservative=0.12)
    other = component(50.0, method=FvaMethod.CALIBRATION_VARIATION)
    report = build_report([rng, other], mode_overrides={"parameter_range:equity_rate_correlation": "embedded"})
    assert report.components[0].mode is FvaMode.EMBEDDED
    assert report.components[0].external_amount == 0.0
    assert report.booked_parameters == {"parameter_range:equity_rate_correlation": 0.12}
    assert report.total_bp == pytest.approx(50.0)
    assert report.coverage * 1e4 == pytest.approx(80.0)


@pytest.mark.parametrize("method", [FvaMethod.MODEL_COMPARISON, FvaMethod.HEDGING_SIMULATION])
def test_some_methods_cannot_be_embedded(method):
    with pytest.raises(UnsupportedModeError):
        build_report([component(10.0, method=method)], mode_overrides={method.value: FvaMode.EMBEDDED})


def test_negative_amount_is_rejected():
    with pytest.raises(ValueError):
        FvaComponent(method=FvaMethod.PARAMETER_RANGE, amount=-1e-6)


def test_markdown_uses_the_json_floats():
    report = build_report([component(12.345, parameter="dividend_yield")])
    text = report_markdown(report)
    dumped = json.loads(report.model_dump_json())
    assert repr(dumped["components"][0]["amount"]) in text
    assert repr(dumped["total"]) in text


# ============== Hedging simulation ==============

SMALL_HEDGE = dict(world_paths=2_000, steps_per_year=52, inner_paths=500, ladder_size=21)


def test_matched_hedge_has_zero_mean_pnl(put, market, mc):
    result = fva_hedging_simulation(put, ModelSpec.lv(), ModelSpec.lv(), market, mc, **SMALL_HEDGE)
    assert result.pnl.shape == (2_000,)
    assert abs(result.mean_pnl) <= 3.0 * result.component.std_error
    assert result.component.amount >= 0.0


def test_underestimated_vol_loses_money(put, market, mc):
    result = fva_hedging_simulation(
        put, ModelSpec.lv(), ModelSpec.lv(), market, mc,
        realized_market=flat_market(vol=0.30), **SMALL_HEDGE,
    )
    assert result.mean_pnl < -3.0 * result.component.std_error
    assert result.component.amount >= -result.mean_pnl


def test_zero_vol_hedge_is_exact(mc):
    market = flat_market(vol=0.001, rate=0.0)
    far_put = VanillaOption(strike=0.5, expiry=1.0)
    result = fva_hedging_simulation(far_put, ModelSpec.lv(), ModelSpec.lv(), market, mc, **SMALL_HEDGE)
    assert np.all(result.pnl == 0.0)
    assert result.component.amount == 0.0


def test_delta_is_recomputed_at_every_rebalance_date(put, market, mc):
    result = fva_hedging_simulation(put, ModelSpec.lv(), ModelSpec.lv(), market, mc, **SMALL_HEDGE)
    assert result.component.diagnostics["delta_dates"] == 52


def test_delta_dates():
    world = np.linspace(0.0, 1.0, 53)
    np.testing.assert_array_equal(delta_dates(world, 1.0, True), world[:-1])
    np.testing.assert_allclose(delta_dates(world, 1.0, True, per_year=4), [0.0, 0.25, 0.5, 0.75])
    np.testing.assert_array_equal(delta_dates(world, 1.0, False), [0.0])


def test_autocallable_matched_hedge(market, mc):
    note = Autocallable(observation_dates=(1.0, 2.0))
    small = dict(world_paths=1_000, steps_per_year=12, inner_paths=200, ladder_size=11)
    result = fva_hedging_simulation(note, ModelSpec.lv(), ModelSpec.lv(), market, mc, **small)
    assert result.pnl.shape == (1_000,)
    assert np.all(np.isfinite(result.pnl))
    # hedge gains are a martingale under the world model, whatever the deltas
    assert abs(result.mean_pnl) <= 3.0 * result.component.std_error
    assert result.component.diagnostics["delta_dates"] == 24
    assert result.component.amount >= 0.0

    again = fva_hedging_simulation(note, ModelSpec.lv(), ModelSpec.lv(), market, mc, **small)
    np.testing.assert_array_equal(again.pnl, result.pnl)


def test_forward_start_has_no_delta_before_fixing(market, mc):
    product = VanillaOption(strike=1.0, expiry=2.0, forward_start=1.0)
    small = dict(world_paths=1_000, steps_per_year=12, inner_paths=200, ladder_size=11)
    result = fva_hedging_simulation(product, ModelSpec.lv(), ModelSpec.lv(), market, mc, **small)
    # flat vol: the forward-start value does not depend on today's spot
    assert abs(result.component.diagnostics["mean_inception_delta"]) < 1e-8
    assert abs(result.mean_pnl) <= 3.0 * result.component.std_error


def test_negative_kappa(put, market, mc):
    with pytest.raises(ValueError):
        fva_hedging_simulation(put, ModelSpec.lv(), ModelSpec.lv(), market, mc, kappa=-0.5, **SMALL_HEDGE)


def test_large_world_warns(put, market, mc, monkeypatch, caplog):
    monkeypatch.setattr(settings, "hedge_warn_paths", 100)
    small = dict(SMALL_HEDGE, world_paths=200)
    with caplog.at_level("WARNING", logger="src.fva.hedging"):
        fva_hedging_simulation(put, ModelSpec.lv(), ModelSpec.lv(), market, mc, **small)
    assert any("world paths" in r.message for r in caplog.records)


@pytest.mark.slow
def test_matched_hedge_full_size(put, market):
    config = McConfig(n_paths=100_000, steps_per_year=48, seed=2012)
    result = fva_hedging_simulation(put, ModelSpec.lv(), ModelSpec.lv(), market, config)
    assert abs(result.mean_pnl) <= 3.0 * result.component.std_error
    assert math.isfinite(result.component.amount)
