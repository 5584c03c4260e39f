"""Deterministic synthetic heat-demand and electricity-price generators.

The demand profile is a fixed shape (flat base load plus a seasonal
degree-day sinusoid modulated by a diurnal cycle) scaled so a full year
integrates to a target energy. Prices are simulated from the same
seasonal autoregressive recursion the forecaster estimates, so the
forecasting step faces a well-specified but noisy signal.
"""

from __future__ import annotations

import numpy as np

from .model import DemandSeries, PriceSeries

YEAR_HOURS = 8760
ANNUAL_HEAT_MWH = 37_500.0
BASE_SHARE = 0.4

# Price-process parameters: persistent daily-seasonal AR with a weekly
# Fourier cycle, levels chosen so prices move across typical marginal
# production costs (a few hundred DKK/MWh).
PRICE_MEAN = 220.0
PRICE_AR = (0.5, 0.1, 0.3)
PRICE_MA = (0.2, 0.0, 0.1)
PRICE_FOURIER = ((4.0, 3.0), (2.0, 1.5))
PRICE_SIGMA = 30.0
_BURN_IN = 400


def _demand_rate(hours: np.ndarray, annual_mwh: float, base_share: float) -> np.ndarray:
    """Hourly heat demand in MWh for absolute hour indices (hour 0 =
    midnight, 1 January)."""
    base = base_share * annual_mwh / YEAR_HOURS
    year_hour = np.asarray(hours) % YEAR_HOURS
    day = year_hour / 24.0
    hod = year_hour % 24
    seasonal = 0.5 * (1.0 + np.cos(2 * np.pi * (day - 15.0) / 365.0))
    diurnal = 1.0 + 0.15 * np.cos(2 * np.pi * (hod - 7.0) / 24.0)
    shape = seasonal * diurnal
    # normalise the variable part against the full-year shape integral
    year = np.arange(YEAR_HOURS)
    year_shape = (0.5 * (1.0 + np.cos(2 * np.pi * (year / 24.0 - 15.0) / 365.0))
                  * (1.0 + 0.15 * np.cos(2 * np.pi * (year % 24 - 7.0) / 24.0)))
    scale = (1.0 - base_share) * annual_mwh / year_shape.sum()
    return base + scale * shape


def synthetic_demand(n_hours: int, start_hour: int = 0,
                     annual_mwh: float = ANNUAL_HEAT_MWH,
                     base_share: float = BASE_SHARE) -> DemandSeries:
    hours = np.arange(start_hour, start_hour + n_hours)
    return DemandSeries(_demand_rate(hours, annual_mwh, base_share), start_hour)


def synthetic_prices(n_hours: int, seed: int = 0, start_hour: int = 0,
                     mean: float = PRICE_MEAN,
                     sigma: float = PRICE_SIGMA) -> PriceSeries:
    """Simulate the seasonal autoregressive price process from a seeded
    shock stream; the same seed always yields the same path."""
    rng = np.random.default_rng(seed)
    ar1, ar2, ar24 = PRICE_AR
    ma1, ma2, ma24 = PRICE_MA
    mu = mean * (1.0 - ar1 - ar2 - ar24)
    total = _BURN_IN + n_hours
    # simulate from absolute hour start_hour - burn-in so the weekly
    # cycle stays phase-locked to the calendar
    hours = np.arange(start_hour - _BURN_IN, start_hour + n_hours)
    fourier = np.zeros(total)
    for k, (a, b) in enumerate(PRICE_FOURIER, start=1):
        w = 2 * np.pi * k * hours / 168.0
        fourier += a * np.sin(w) + b * np.cos(w)
    eps = rng.normal(0.0, sigma, total)
    lam = np.full(total, mean)
    for t in range(total):
        v = mu + fourier[t] + eps[t]
        if t >= 1:
            v += ar1 * lam[t - 1] + ma1 * eps[t - 1]
        if t >= 2:
            v += ar2 * lam[t - 2] + ma2 * eps[t - 2]
        if t >= 24:
            v += ar24 * lam[t - 24] + ma24 * eps[t - 24]
        lam[t] = v
    return PriceSeries(lam[_BURN_IN:], start_hour)


def generate_dataset(seed: int = 0, warmup_days: int = 49, tail_days: int = 15,
                     year_days: int = 365) -> tuple[PriceSeries, DemandSeries]:
    """History + one year + look-ahead tail of prices and demand.

    The series start ``warmup_days`` before the simulated year so a
    forecaster has history available on day one, and run ``tail_days``
    past it so multi-day planning horizons stay inside the data.
    """
    n = (warmup_days + year_days + tail_days) * 24
    start = -warmup_days * 24
    return (synthetic_prices(n, seed, start), synthetic_demand(n, start))
