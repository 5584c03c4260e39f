"""Reference bidding strategies the replacement method is compared against.

Five strategies from the bidding literature, re-implemented at summary
fidelity on top of the shared operational MILP: interval bidding (A),
quantile curves (B), forecast-price bidding (C), scenario curves (D) and
marginal-cost levels (E). All produce the same OfferSet structure as the
replacement method.
"""

from __future__ import annotations

import numpy as np

from .forecast import SarimaFourierModel
from .hurb import AMOUNT_TOL, Offer, OfferSet, _solve_plan, bidding_price, \
    replacement_iterations, sort_heat_only, SHORTAGE_TOL
from .model import DemandSeries, Horizon, PriceSeries, SystemConfig

BASELINE_IDS = ("A", "B", "C", "D", "E")
DEFAULT_QUANTILES = (0.1, 0.25, 0.5, 0.75, 0.9)
DEFAULT_SCENARIOS = 20


def _chp_power(system, horizon, prices, demand, s0):
    """Optimal CHP power under the given price path; slack is allowed so
    that a price path can never abort a bidding day."""
    plan = _solve_plan(system.with_initial_storage(s0), horizon, prices, demand,
                       None, None, allow_slack=True, label="baseline")
    return plan


def method_c(system: SystemConfig, horizon: Horizon, forecast: PriceSeries,
             demand: DemandSeries, s0: float) -> OfferSet:
    """Offer the planned production at the forecast price itself."""
    plan = _chp_power(system, horizon, forecast, demand, s0)
    offers = OfferSet()
    for u in system.chp_units:
        for t in range(24):
            amount = plan.p[u.id][t]
            if amount > AMOUNT_TOL:
                offers.add(Offer(u.id, t + 1, float(forecast.values[t]), amount, 1))
    offers.validate(system)
    return offers


def method_a(system: SystemConfig, horizon: Horizon,
             price_model: SarimaFourierModel, demand: DemandSeries, s0: float,
             level: float = 0.9) -> OfferSet:
    """Two-price interval bidding: volumes planned at the lower forecast
    bound go in at the lower price, extra volumes at the upper bound price."""
    n = horizon.n_periods
    lower, upper = price_model.forecast_interval(n, level)
    plan_lo = _chp_power(system, horizon, lower, demand, s0)
    plan_hi = _chp_power(system, horizon, upper, demand, s0)
    offers = OfferSet()
    for u in system.chp_units:
        for t in range(24):
            a_lo = plan_lo.p[u.id][t]
            if a_lo > AMOUNT_TOL:
                offers.add(Offer(u.id, t + 1, float(lower.values[t]), a_lo, 1))
            a_hi = plan_hi.p[u.id][t] - a_lo
            if a_hi > AMOUNT_TOL:  # negative increments are clipped to 0
                offers.add(Offer(u.id, t + 1, float(upper.values[t]), a_hi, 2))
    offers.validate(system)
    return offers


def method_b(system: SystemConfig, horizon: Horizon,
             price_model: SarimaFourierModel, demand: DemandSeries, s0: float,
             quantiles: tuple[float, ...] = DEFAULT_QUANTILES) -> OfferSet:
    """Quantile-path bidding: a monotone curve built from the production
    planned under each forecast quantile path."""
    if list(quantiles) != sorted(quantiles):
        raise ValueError("quantiles must be sorted ascending")
    n = horizon.n_periods
    offers = OfferSet()
    running = {(u.id, t): 0.0 for u in system.chp_units for t in range(24)}
    for i, q in enumerate(quantiles, start=1):
        path = price_model.quantile_path(n, q)
        plan = _chp_power(system, horizon, path, demand, s0)
        for u in system.chp_units:
            for t in range(24):
                inc = plan.p[u.id][t] - running[(u.id, t)]
                if inc > AMOUNT_TOL:
                    offers.add(Offer(u.id, t + 1, float(path.values[t]), inc, i))
                    running[(u.id, t)] += inc
    offers.validate(system)
    return offers


def method_d(system: SystemConfig, horizon: Horizon,
             price_model: SarimaFourierModel, demand: DemandSeries, s0: float,
             n_scenarios: int = DEFAULT_SCENARIOS, seed: int = 0) -> OfferSet:
    """Scenario bidding: per hour, the price-sorted running maximum of the
    per-scenario production plans forms the offer curve."""
    if n_scenarios < 1:
        raise ValueError("need at least one scenario")
    n = horizon.n_periods
    scenarios = price_model.sample_scenarios(n, n_scenarios, seed)
    plans = [_chp_power(system, horizon, s, demand, s0) for s in scenarios]
    offers = OfferSet()
    for u in system.chp_units:
        for t in range(24):
            pairs = sorted(
                (float(s.values[t]), plans[i].p[u.id][t])
                for i, s in enumerate(scenarios)
            )
            running = 0.0
            step = 0
            for price, volume in pairs:
                inc = volume - running
                if inc > AMOUNT_TOL:
                    step += 1
                    offers.add(Offer(u.id, t + 1, price, inc, step))
                    running = volume
    offers.validate(system)
    return offers


def method_e(system: SystemConfig, horizon: Horizon, forecast: PriceSeries,
             demand: DemandSeries, s0: float) -> OfferSet:
    """Marginal-cost-level bidding: same price levels and volumes as the
    replacement method, but an hour is only offered when the forecast
    clears the level."""
    _, iterations = replacement_iterations(system, horizon, forecast, demand, s0)
    offers = OfferSet()
    k = {(u.id, t): 0.0 for u in system.chp_units for t in range(24)}
    for it in iterations:
        for u in system.chp_units:
            price = bidding_price(u, it.removed)
            for t in range(24):
                if it.shortage[t] > SHORTAGE_TOL:
                    continue
                amount = it.plan.p[u.id][t] - k[(u.id, t)]
                if amount > AMOUNT_TOL and forecast.values[t] >= price:
                    offers.add(Offer(u.id, t + 1, price, amount, it.index,
                                     it.removed.id))
                k[(u.id, t)] += amount
    offers.validate(system)
    return offers
