import numpy as np
import pytest

from heatbid.baselines import (
    method_a,
    method_b,
    method_c,
    method_d,
    method_e,
)
from heatbid.forecast import LONG_AR, SarimaFourierModel
from heatbid.hurb import generate_bids
from heatbid.model import DemandSeries, Horizon, PriceSeries


def flat_model(level: float, sigma: float) -> SarimaFourierModel:
    """A degenerate price model that forecasts a constant level."""
    return SarimaFourierModel(
        mu=level, ar=(0.0, 0.0, 0.0), ma=(0.0, 0.0, 0.0), fourier=[],
        sigma=sigma, tail_values=np.full(LONG_AR, level),
        tail_residuals=np.zeros(LONG_AR), end_hour=0)


DAY = Horizon(24)


def _key(offers):
    return sorted((o.unit, o.hour, round(o.price, 9), round(o.amount, 9))
                  for o in offers)


def test_method_c_empty_below_costs(demo):
    forecast = PriceSeries(np.full(24, 10.0))
    offers = method_c(demo, DAY, forecast, DemandSeries(np.full(24, 4.0)), 10.0)
    assert len(offers) == 0


def test_method_c_offers_at_forecast_price(demo):
    forecast = PriceSeries(np.full(24, 5000.0))
    offers = method_c(demo, DAY, forecast, DemandSeries(np.full(24, 6.0)), 10.0)
    assert len(offers) == 48
    assert all(o.price == pytest.approx(5000.0) for o in offers)
    assert all(o.amount == pytest.approx(2.5) for o in offers)


def test_method_a_degenerates_to_c_with_zero_variance(demo):
    model = flat_model(800.0, 0.0)
    demand = DemandSeries(np.full(24, 4.0))
    a = method_a(demo, DAY, model, demand, 10.0)
    c = method_c(demo, DAY, model.predict(24), demand, 10.0)
    assert _key(a) == _key(c)


def test_method_a_prices_straddle_the_margin(demo):
    """Interval wide enough that only the upper path clears the CHP
    margin: all offers sit at upper-bound prices."""
    model = flat_model(700.0, 60.0)  # margin is 610.84 * 1.18 = 720.79
    demand = DemandSeries(np.zeros(24))
    offers = method_a(demo, DAY, model, demand, 10.0)
    lower, upper = model.forecast_interval(24, 0.9)
    assert all(o.iteration == 2 for o in offers)
    for o in offers:
        assert o.price == pytest.approx(upper.values[o.hour - 1])
    assert len(offers) > 0


def test_method_b_builds_monotone_curves(demo):
    model = flat_model(730.0, 30.0)
    demand = DemandSeries(np.full(24, 4.0))
    offers = method_b(demo, DAY, model, demand, 10.0)
    offers.validate(demo)
    by_hour = {}
    for o in offers:
        by_hour.setdefault((o.unit, o.hour), []).append((o.iteration, o.price))
    for steps in by_hour.values():
        steps.sort()
        prices = [p for _, p in steps]
        assert prices == sorted(prices)


def test_method_b_rejects_unsorted_quantiles(demo):
    with pytest.raises(ValueError):
        method_b(demo, DAY, flat_model(500.0, 10.0),
                 DemandSeries(np.zeros(24)), 10.0, quantiles=(0.9, 0.1))


def test_method_d_single_zero_variance_scenario_equals_c(demo):
    model = flat_model(800.0, 0.0)
    demand = DemandSeries(np.full(24, 4.0))
    d = method_d(demo, DAY, model, demand, 10.0, n_scenarios=1, seed=0)
    c = method_c(demo, DAY, model.predict(24), demand, 10.0)
    assert _key(d) == _key(c)


def test_method_d_is_seed_deterministic(demo):
    model = flat_model(730.0, 40.0)
    demand = DemandSeries(np.full(24, 4.0))
    one = method_d(demo, DAY, model, demand, 10.0, n_scenarios=5, seed=9)
    two = method_d(demo, DAY, model, demand, 10.0, n_scenarios=5, seed=9)
    assert _key(one) == _key(two)
    other = method_d(demo, DAY, model, demand, 10.0, n_scenarios=5, seed=10)
    assert one.to_csv() != other.to_csv() or _key(one) == _key(other)


def test_method_e_empty_below_lowest_level(demo):
    forecast = PriceSeries(np.full(24, 100.0))  # below 244.05
    offers = method_e(demo, DAY, forecast, DemandSeries(np.full(24, 4.0)), 10.0)
    assert len(offers) == 0


def test_method_e_matches_hurb_hours_on_high_price_day(demo):
    forecast = PriceSeries(np.full(24, 5000.0))
    demand = DemandSeries(np.full(24, 6.0))
    e = method_e(demo, DAY, forecast, demand, 10.0)
    h = generate_bids(demo, DAY, forecast, demand, 10.0)
    for u in demo.chp_units:
        assert e.hours_with_offers(u.id) == h.hours_with_offers(u.id)
    # identical price levels and volumes as the replacement method
    assert _key(e) == _key(h)


def test_method_e_is_a_filtered_hurb(demo, surrogate_day):
    horizon, forecast, demand, s0 = surrogate_day
    e = method_e(demo, horizon, forecast, demand, s0)
    h = generate_bids(demo, horizon, forecast, demand, s0)
    h_keys = set(_key(h))
    for item in _key(e):
        assert item in h_keys
    for o in e:
        assert forecast.values[o.hour - 1] >= o.price
