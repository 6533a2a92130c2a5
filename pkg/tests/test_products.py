import json
import math

import numpy as np
import pytest

from src.engine import ConfigurationError, McConfig, ModelSpec, PathSet, bs_delta, price, price_pathwise
from src.products import (
    Autocallable,
    DigitalOption,
    ForwardContract,
    GridMisalignmentError,
    PayoffProfile,
    ProductFileError,
    SofteningPolicy,
    UnsupportedMetricError,
    VanillaOption,
    greeks,
    load_product,
    parse_product,
    soften,
    soften_product,
)

SCAN = np.round(np.arange(0.0, 2.0 + 5e-4, 1e-3), 10)


def yearly_paths(market, returns_by_year, bank=None) -> PathSet:
    """Hand-built paths observed at 0..5 years with spot 100 at inception."""
    spot = 100.0 * np.array([[1.0] + list(row) for row in returns_by_year])
    times = np.arange(spot.shape[1], dtype=float)
    return PathSet(
        times=times,
        spot=spot,
        bank=np.ones_like(spot) if bank is None else bank,
        short_rate=None,
        model=ModelSpec.lv(),
        market=market,
    )


# ============== Autocallable cashflows ==============

def test_called_at_first_observation(market):
    paths = yearly_paths(market, [[1.10, 1.2, 1.3, 1.4, 1.5]])
    assert Autocallable().cashflows_for_path(paths, 0) == [(1.0, pytest.approx(1.05))]


def test_called_at_third_observation(market):
    paths = yearly_paths(market, [[0.9, 0.95, 1.0, 1.4, 1.5]])
    assert Autocallable(notional=1000.0).cashflows_for_path(paths, 0) == [(3.0, pytest.approx(1150.0))]


def test_never_called_low_terminal_return(market):
    paths = yearly_paths(market, [[0.9, 0.8, 0.7, 0.6, 0.40]])
    # 1.0 - (0.5 - 0.4) - 0.5 x 1{0.4 < 0.5}
    assert Autocallable().cashflows_for_path(paths, 0) == [(5.0, pytest.approx(0.40))]


def test_digital_does_not_trigger_at_its_strike(market):
    paths = yearly_paths(market, [[0.9, 0.8, 0.7, 0.6, 0.5]])
    assert Autocallable().cashflows_for_path(paths, 0) == [(5.0, pytest.approx(1.0))]


def test_floating_coupons_paid_while_alive(market):
    paths = yearly_paths(market, [[0.9, 1.05, 1.1, 1.2, 1.3]])
    forward = math.exp(0.01) - 1.0
    flows = Autocallable(floating_leg=True, floating_spread=0.002).cashflows_for_path(paths, 0)
    assert flows == [
        (1.0, pytest.approx(-(forward + 0.002))),
        (2.0, pytest.approx(-(forward + 0.002))),
        (2.0, pytest.approx(1.10)),
    ]


def test_observation_off_the_grid_is_rejected(market):
    paths = yearly_paths(market, [[1.0, 1.0, 1.0, 1.0, 1.0]])
    product = Autocallable(observation_dates=(1.5, 2.5))
    with pytest.raises(GridMisalignmentError):
        product.cashflows(paths, 100.0)


def test_autocallable_decomposes_into_bond_minus_put(market, mc):
    note = Autocallable(autocall_barrier=1e9, coupon_step=0.0, digital_leverage=0.0)
    put = VanillaOption(strike=0.5, expiry=5.0)
    note_values = price_pathwise(note, ModelSpec.lv(), market, mc)
    put_values = price_pathwise(put, ModelSpec.lv(), market, mc)
    np.testing.assert_allclose(note_values, market.discount.discount_factor(5.0) - put_values, atol=1e-12)


def test_rescale_keeps_frequency():
    assert Autocallable().rescale(3.0).observation_dates == (1.0, 2.0, 3.0)
    assert Autocallable(forward_start=0.5, observation_dates=(1.5, 2.5)).rescale(4.5).observation_dates == (
        1.5, 2.5, 3.5, 4.5,
    )
    with pytest.raises(ConfigurationError):
        Autocallable().rescale(2.5)


@pytest.mark.parametrize("kwargs", [
    {"observation_dates": (2.0, 1.0)},
    {"autocall_barrier": 0.0},
    {"coupon_step": -0.01},
    {"forward_start": 1.0},
])
def test_invalid_autocallable(kwargs):
    with pytest.raises(ConfigurationError):
        Autocallable(**kwargs)


# ============== Product files ==============

def test_product_file_echoes_defaults(tmp_path):
    (tmp_path / "ac.json").write_text(json.dumps({"observation_dates": [1, 2, 3]}), encoding="utf-8")
    product, echo = load_product(tmp_path / "ac.json")
    assert isinstance(product, Autocallable)
    assert echo["coupon_step"] == 0.05
    assert echo["digital_leverage"] == 0.5
    assert echo["type"] == "autocallable"


def test_shipped_products_load(data_dir):
    note, _ = load_product(data_dir / "autocallable.json")
    put, _ = load_product(data_dir / "vanilla_put.json")
    assert note.floating_leg and note.horizon == 5.0
    assert put.strike == 1.0 and put.family == "vanilla"


def test_softening_block_in_product_file():
    product = parse_product({"type": "digital", "strike": 0.5, "expiry": 1.0, "leverage": 0.5, "softening": {"max_delta": 5}}).build()
    assert product.family == "digital"
    assert product.terminal_profile()(0.55) == pytest.approx(0.25, abs=1e-3)


def test_bad_product_files(tmp_path):
    with pytest.raises(ProductFileError):
        load_product(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text(json.dumps({"type": "vanilla", "strike": -1, "expiry": 1}), encoding="utf-8")
    with pytest.raises(ProductFileError):
        load_product(tmp_path / "bad.json")


# ============== Profiles ==============

def test_profile_constructors():
    assert PayoffProfile.put(0.5)(np.array([0.3, 0.5, 0.8])).tolist() == pytest.approx([0.2, 0.0, 0.0])
    assert PayoffProfile.call(1.0)(1.25) == pytest.approx(0.25)
    digital = PayoffProfile.digital_put(0.5, 0.5)
    assert digital(0.4999) == 0.5
    assert digital(0.5) == 0.0
    assert digital.left_limit(0.5) == 0.5
    assert PayoffProfile.forward(1.0)(0.7) == pytest.approx(-0.3)


def test_combined_profile_matches_autocallable_maturity_payoff():
    profile = Autocallable().maturity_profile()
    assert profile(0.4) == pytest.approx(0.4)
    assert profile(0.5) == pytest.approx(1.0)
    assert profile(0.9) == pytest.approx(1.0)


# ============== Softening ==============

def slopes(values: np.ndarray) -> np.ndarray:
    return np.diff(values) / np.diff(SCAN)


def test_unbounded_policy_is_identity():
    profile = PayoffProfile.digital_put(0.5, 0.5)
    assert soften(profile, SofteningPolicy()) is profile


def test_digital_becomes_a_ramp_above_the_strike():
    original = PayoffProfile.digital_put(0.5, 0.5)
    soft = soften(original, SofteningPolicy(max_delta=5.0))
    assert soft(0.4) == pytest.approx(0.5, abs=1e-9)
    assert soft(0.5) == pytest.approx(0.5, abs=1e-9)
    assert soft(0.55) == pytest.approx(0.25, abs=1e-6)
    assert soft(0.6) == pytest.approx(0.0, abs=1e-6)
    assert soft(0.8) == 0.0

    values = np.asarray(soft(SCAN))
    assert np.all(values >= np.asarray(original(SCAN)) - 1e-9)
    assert np.all(values >= np.asarray(original.left_limit(SCAN)) - 1e-9)
    assert np.max(np.abs(slopes(values))) <= 5.0 + 1e-6


def test_put_kink_becomes_a_parabola():
    original = PayoffProfile.put(0.5)
    soft = soften(original, SofteningPolicy(max_gamma=20.0))
    values = np.asarray(soft(SCAN))
    assert np.all(values >= np.asarray(original(SCAN)) - 1e-9)
    second = np.diff(values, 2) / 1e-6
    assert np.max(second) <= 20.0 * (1.0 + 1e-6) + 1e-6
    # blend of width 1/20 centred on the strike
    assert soft(0.5) == pytest.approx(10.0 * 0.025 ** 2, abs=1e-4)
    assert soft(0.4) == pytest.approx(0.1, abs=1e-9)
    assert soft(0.6) == pytest.approx(0.0, abs=1e-9)


def test_both_bounds_on_autocallable_profile():
    policy = SofteningPolicy(max_delta=5.0, max_gamma=50.0)
    original = Autocallable().maturity_profile()
    soft = soften(original, policy)
    values = np.asarray(soft(SCAN))
    assert np.all(values >= np.asarray(original(SCAN)) - 1e-9)
    assert np.max(np.abs(slopes(values))) <= 5.0 + 1e-6
    assert np.max(np.diff(values, 2) / 1e-6) <= 50.0 * (1.0 + 1e-6) + 1e-6


def test_softening_is_idempotent():
    policy = SofteningPolicy(max_delta=5.0, max_gamma=50.0)
    once = soften(PayoffProfile.digital_put(0.5, 0.5), policy)
    twice = soften(once, policy)
    np.testing.assert_allclose(np.asarray(twice(SCAN)), np.asarray(once(SCAN)), atol=1e-9)


def test_softened_price_dominates(market, mc):
    for product in (DigitalOption(strike=1.0, expiry=1.0), VanillaOption(strike=1.0, expiry=1.0)):
        soft = soften_product(product, SofteningPolicy(max_delta=5.0, max_gamma=40.0))
        base = price_pathwise(product, ModelSpec.lv(), market, mc)
        softened = price_pathwise(soft, ModelSpec.lv(), market, mc)
        assert np.all(softened >= base)
        assert softened.mean() >= base.mean()


def test_softened_autocallable_price_dominates(market, mc):
    note = Autocallable(observation_dates=(1.0, 2.0, 3.0))
    soft = note.with_softening(SofteningPolicy(max_delta=5.0))
    assert price(soft, ModelSpec.lv(), market, mc).value >= price(note, ModelSpec.lv(), market, mc).value


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_policy_bounds_must_be_positive(bad):
    with pytest.raises(ConfigurationError):
        SofteningPolicy(max_delta=bad)


# ============== Greeks ==============

def test_forward_contract_greeks(market_factory):
    market = market_factory(vol=0.001, rate=0.0)
    config = McConfig(n_paths=2_000, steps_per_year=12, seed=4)
    report = greeks(ForwardContract(expiry=1.0, notional=100.0), ModelSpec.lv(), market, config)
    assert report.delta.value == pytest.approx(1.0, abs=1e-6)
    assert report.gamma.value == pytest.approx(0.0, abs=1e-6)
    assert report.delta.bumps["spot_relative"] == 0.01


def test_put_delta_against_black_scholes(market):
    config = McConfig(n_paths=20_000, steps_per_year=12, seed=8)
    report = greeks(VanillaOption(strike=1.0, expiry=1.0), ModelSpec.lv(), market, config)
    oracle = bs_delta(100.0, 100.0, 1.0, 0.01, 0.0, 0.2, is_call=False)
    # value is per unit of the 100 fixing
    assert report.delta.value * 100.0 == pytest.approx(oracle, abs=0.02)
    assert report.vega.value > 0.0
    assert report.correlation_sensitivity is None
    assert report.vega.bumps == {"vol": 0.01}


def test_softening_reduces_digital_delta(market):
    config = McConfig(n_paths=20_000, steps_per_year=12, seed=8)
    digital = DigitalOption(strike=1.0, expiry=1.0)
    soft = soften_product(digital, SofteningPolicy(max_delta=5.0))
    raw_delta = greeks(digital, ModelSpec.lv(), market, config).delta.value
    soft_delta = greeks(soft, ModelSpec.lv(), market, config).delta.value
    assert abs(soft_delta) < abs(raw_delta)


def test_correlation_sensitivity_needs_hwlv(market, mc):
    with pytest.raises(UnsupportedMetricError):
        greeks(VanillaOption(strike=1.0, expiry=1.0), ModelSpec.lv(), market, mc, correlation=True)


def test_hwlv_reports_correlation_sensitivity(market):
    config = McConfig(n_paths=2_000, steps_per_year=12, seed=8)
    model = ModelSpec.hwlv(0.05, 0.008, 0.3, leverage_mode="reuse")
    report = greeks(Autocallable(observation_dates=(1.0, 2.0)), model, market, config)
    assert report.correlation_sensitivity is not None
    assert report.correlation_sensitivity.bumps == {"correlation": 0.05}
    assert report.metric("correlation_sensitivity") is report.correlation_sensitivity
    assert set(report.to_dict()) == {"base_value", "delta", "gamma", "vega", "vanna", "correlation_sensitivity"}
