import numpy as np
import pytest

from heatbid.cli import demo_system
from heatbid.model import DemandSeries, Horizon, PriceSeries


@pytest.fixture(scope="session")
def demo():
    return demo_system()


@pytest.fixture(scope="session")
def surrogate_day():
    """A 24-hour day on which the replacement method's first iteration
    turns both CHP engines off in hours 3-5 plus one extra hour each,
    leaving 40 engine-hours on, and the second iteration runs all 48.

    Demand totals 139.2 MWh: low at night, high by day. The price path
    makes hours 3-5 worthless for both engines, and hours 6 and 24 just
    cheap enough that exactly one engine drops out in each.
    """
    demand = np.array([4.2] * 8 + [6.6] * 16)
    forecast = np.full(24, 300.0)
    forecast[2:5] = 0.0
    forecast[5] = 50.0
    forecast[23] = 50.0
    return (Horizon(24), PriceSeries(forecast), DemandSeries(demand), 10.0)
