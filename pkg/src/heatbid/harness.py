"""Daily rolling evaluation of bidding strategies against realized prices.

Each simulated day: refit the price model on a trailing window, build the
day-ahead offers for the chosen strategy, settle them against the realized
prices, then re-dispatch the plant with the accepted power fixed to get
the actual operating cost. Storage carries over between days. A
perfect-information solve of the whole window gives the reference cost
every strategy is measured against.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from . import baselines
from .exceptions import ConfigError, InfeasibleProblem, LengthMismatch
from .forecast import MIN_HISTORY, fit_sarima
from .hurb import OfferSet, generate_bids
from .model import (
    DemandSeries,
    Horizon,
    PriceSeries,
    SystemConfig,
    build_operational_milp,
    extract_dispatch,
    DispatchPlan,
)
from .solver import SolveStatus, solve_milp, solve_planning

PRICE_TIE_TOL = 1e-9
DEFAULT_REFIT_WINDOW_DAYS = 42
DEFAULT_K_MAX = 4
DEFAULT_REFINE = 5

METHODS = ("hurb", "A", "B", "C", "D", "E")


@dataclass(frozen=True)
class Commitment:
    """Accepted market volume for one unit in one delivery hour (1..24)."""

    unit: str
    hour: int
    power: float


def settle(offers: OfferSet, realized: PriceSeries) -> list[Commitment]:
    """Settle day-ahead offers against realized prices.

    An offer is accepted when the realized price in its hour is at or
    above the offer price; accepted volumes per unit-hour are summed.
    """
    if len(realized) < 24:
        raise LengthMismatch(f"need 24 realized prices, got {len(realized)}")
    won: dict[tuple[str, int], float] = {}
    for off in offers:
        if realized.values[off.hour - 1] >= off.price - PRICE_TIE_TOL:
            key = (off.unit, off.hour)
            won[key] = won.get(key, 0.0) + off.amount
    return [Commitment(u, h, amt) for (u, h), amt in sorted(won.items())]


@dataclass
class RedispatchResult:
    plan: DispatchPlan
    day_cost: float
    raised: list[Commitment]  # commitments lifted to the technical minimum
    slack_used: bool


def redispatch(system: SystemConfig, horizon: Horizon, prices: PriceSeries,
               demand: DemandSeries, commitments: list[Commitment],
               s0: float) -> RedispatchResult:
    """Re-optimise heat dispatch with the accepted power fixed.

    ``prices`` must hold realized prices for the first 24 hours and
    forecast prices beyond. Accepted power below a unit's technical
    minimum is delivered at the minimum, but only the accepted volume
    earns revenue. The day cost covers hours 1..24 only: fuel for all
    heat produced minus market revenue on the accepted volumes. If the
    commitments are physically infeasible the dispatch is resolved with
    penalised shortage/dump slack (flagged), whose penalty is excluded
    from the reported cost.
    """
    sysd = system.with_initial_storage(s0)
    committed = {(c.unit, c.hour - 1): c.power for c in commitments}
    power_fix: dict[tuple[str, int], float] = {}
    raised = []
    for u in system.chp_units:
        for t in range(24):
            won = committed.get((u.id, t), 0.0)
            fix = won
            if 0.0 < won < u.p_min:
                fix = u.p_min
                raised.append(Commitment(u.id, t + 1, won))
            power_fix[(u.id, t)] = fix

    slack_used = False
    prob = build_operational_milp(sysd, horizon, prices, demand,
                                  power_fix=power_fix, name="redispatch")
    ok = (SolveStatus.OPTIMAL, SolveStatus.FEASIBLE)
    sol = solve_planning(prob)
    if sol.status not in ok:
        slack_used = True
        prob = build_operational_milp(sysd, horizon, prices, demand,
                                      power_fix=power_fix, slack=True,
                                      name="redispatch")
        sol = solve_planning(prob)
        if sol.status not in ok:
            raise InfeasibleProblem(f"redispatch: status {sol.status.value}")
    plan = extract_dispatch(prob, sol)

    cost = 0.0
    for u in system.chp_units:
        cost += u.cost_heat * u.phi * float(np.sum(plan.p[u.id][:24]))
    for u in system.heat_only_units:
        cost += u.cost_heat * float(np.sum(plan.q[u.id][:24]))
    for c in commitments:
        cost -= c.power * float(prices.values[c.hour - 1])
    return RedispatchResult(plan, cost, raised, slack_used)


@dataclass(frozen=True)
class MarketData:
    """Aligned realized prices and demand for a rolling simulation.

    The first ``history_hours`` hours are forecasting history; the
    simulated window starts right after and runs ``n_days`` days. Both
    series must additionally cover any planning look-ahead past the
    window's last day.
    """

    prices: PriceSeries
    demand: DemandSeries
    n_days: int
    history_hours: int

    def __post_init__(self):
        if self.history_hours < MIN_HISTORY:
            raise ConfigError(
                f"need at least {MIN_HISTORY} hours of price history")
        if self.prices.start_hour != self.demand.start_hour:
            raise ConfigError("price and demand series are not aligned")
        if len(self.prices) != len(self.demand):
            raise ConfigError("price and demand series differ in length")
        if len(self.prices) < self.history_hours + self.n_days * 24:
            raise ConfigError("series shorter than history + window")

    def lookahead_days(self) -> int:
        """Whole days available past the end of the window."""
        extra = len(self.prices) - self.history_hours - self.n_days * 24
        return 1 + extra // 24


@dataclass
class DayRecord:
    day: int
    cost: float
    n_offers: int
    offer_hours: int  # hours (of 24) with at least one offer
    won_hours: int    # hours with accepted volume
    storage_end: float
    slack_used: bool


@dataclass
class SimulationReport:
    method: str
    rh_days: int
    days: list[DayRecord] = field(default_factory=list)

    @property
    def total_cost(self) -> float:
        return sum(d.cost for d in self.days)

    @property
    def offer_hour_share(self) -> float:
        return sum(d.offer_hours for d in self.days) / (24.0 * len(self.days))

    @property
    def won_hour_share(self) -> float:
        return sum(d.won_hours for d in self.days) / (24.0 * len(self.days))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("day,cost,n_offers,offer_hours,won_hours,storage_end,slack_used\n")
        for d in self.days:
            buf.write(f"{d.day},{d.cost:.6f},{d.n_offers},{d.offer_hours},"
                      f"{d.won_hours},{d.storage_end:.6f},{int(d.slack_used)}\n")
        return buf.getvalue()


def _build_offers(method: str, system, horizon, model, forecast, demand, s0,
                  params: dict) -> OfferSet:
    if method == "hurb":
        return generate_bids(system, horizon, forecast, demand, s0)
    if method == "A":
        return baselines.method_a(system, horizon, model, demand, s0,
                                  level=params.get("level", 0.9))
    if method == "B":
        return baselines.method_b(
            system, horizon, model, demand, s0,
            quantiles=params.get("quantiles", baselines.DEFAULT_QUANTILES))
    if method == "C":
        return baselines.method_c(system, horizon, forecast, demand, s0)
    if method == "D":
        return baselines.method_d(
            system, horizon, model, demand, s0,
            n_scenarios=params.get("n_scenarios", baselines.DEFAULT_SCENARIOS),
            seed=params.get("seed", 0))
    if method == "E":
        return baselines.method_e(system, horizon, forecast, demand, s0)
    raise ConfigError(f"unknown method {method!r}; expected one of {METHODS}")


def run_rolling(system: SystemConfig, data: MarketData, method: str,
                rh_days: int = 3, *,
                refit_window_days: int = DEFAULT_REFIT_WINDOW_DAYS,
                k_max: int = DEFAULT_K_MAX, refine: int = DEFAULT_REFINE,
                method_params: dict | None = None,
                model_cache: dict | None = None,
                progress=None) -> SimulationReport:
    """Simulate one strategy day by day over the data window.

    ``model_cache`` (keyed by day index) lets several runs over the same
    data share the daily price-model fits. ``progress``, if given, is
    called with each DayRecord as it is produced.
    """
    if rh_days < 1:
        raise ConfigError("rh_days must be at least 1")
    if data.lookahead_days() < rh_days:
        raise ConfigError(
            f"data supports a look-ahead of {data.lookahead_days()} days, "
            f"rh_days={rh_days} requested")
    params = dict(method_params or {})
    base_seed = params.get("seed", 0)
    horizon = Horizon(rh_days * 24)
    n_hours = rh_days * 24
    report = SimulationReport(method, rh_days)
    s0 = system.storage.s_initial
    for day in range(data.n_days):
        off = data.history_hours + day * 24
        if model_cache is not None and day in model_cache:
            model = model_cache[day]
        else:
            window = min(refit_window_days * 24, off)
            model = fit_sarima(data.prices.slice(off - window, window),
                               k_max=k_max, refine=refine)
            if model_cache is not None:
                model_cache[day] = model
        forecast = model.predict(n_hours)
        demand_d = data.demand.slice(off, n_hours)
        if method == "D":
            params["seed"] = base_seed + day
        offers = _build_offers(method, system, horizon, model, forecast,
                               demand_d, s0, params)
        realized_day = data.prices.slice(off, 24)
        commitments = settle(offers, realized_day)
        mixed = PriceSeries(
            np.concatenate([realized_day.values, forecast.values[24:]]),
            realized_day.start_hour)
        result = redispatch(system, horizon, mixed, demand_d, commitments, s0)
        s0 = float(result.plan.s_level[23])
        record = DayRecord(
            day=day,
            cost=result.day_cost,
            n_offers=len(offers),
            offer_hours=len({o.hour for o in offers}),
            won_hours=len({c.hour for c in commitments}),
            storage_end=s0,
            slack_used=result.slack_used,
        )
        report.days.append(record)
        if progress is not None:
            progress(record)
    return report


def perfect_information_cost(system: SystemConfig, data: MarketData,
                             gap_tol: float = 1e-6,
                             time_limit: float | None = None) -> float:
    """Cost of operating the whole window with the realized prices known
    in advance: one optimisation over all days at once.

    The end-of-horizon storage anchor is dropped here: a rolling run may
    finish the window at any storage level, so the reference must allow
    the same freedom to stay a true lower bound on every strategy.
    """
    n = data.n_days * 24
    horizon = Horizon(n)
    prices = data.prices.slice(data.history_hours, n)
    demand = data.demand.slice(data.history_hours, n)
    prob = build_operational_milp(system, horizon, prices, demand,
                                  end_anchor=False,
                                  name="perfect-information")
    sol = solve_milp(prob, gap_tol=gap_tol, time_limit=time_limit)
    if sol.status is not SolveStatus.OPTIMAL:
        raise InfeasibleProblem(f"perfect information: {sol.status.value}")
    return sol.objective


@dataclass
class ComparisonRow:
    method: str
    rh_days: int
    sample: int
    cost: float
    pi_cost: float

    @property
    def regret(self) -> float:
        return self.cost - self.pi_cost


@dataclass
class ComparisonTable:
    rows: list[ComparisonRow] = field(default_factory=list)

    def summary(self) -> dict[str, dict[str, float]]:
        """Per method: best / average / worst mean regret across the
        planning-horizon settings."""
        out: dict[str, dict[str, float]] = {}
        methods = sorted({r.method for r in self.rows})
        for m in methods:
            per_rh = {}
            for rh in sorted({r.rh_days for r in self.rows if r.method == m}):
                vals = [r.regret for r in self.rows
                        if r.method == m and r.rh_days == rh]
                per_rh[rh] = sum(vals) / len(vals)
            means = list(per_rh.values())
            out[m] = {"best": min(means), "average": sum(means) / len(means),
                      "worst": max(means)}
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("method,rh_days,sample,cost,pi_cost,regret\n")
        for r in self.rows:
            buf.write(f"{r.method},{r.rh_days},{r.sample},{r.cost:.6f},"
                      f"{r.pi_cost:.6f},{r.regret:.6f}\n")
        return buf.getvalue()


def compare_methods(system: SystemConfig, datasets: list[MarketData],
                    methods: tuple[str, ...] = METHODS,
                    rh_days_list: tuple[int, ...] = (1, 3, 5), *,
                    refit_window_days: int = DEFAULT_REFIT_WINDOW_DAYS,
                    k_max: int = DEFAULT_K_MAX, refine: int = DEFAULT_REFINE,
                    method_params: dict | None = None) -> ComparisonTable:
    """Run every (method, look-ahead) pair on every dataset and collect
    costs next to the perfect-information reference."""
    table = ComparisonTable()
    for sample, data in enumerate(datasets):
        pi = perfect_information_cost(system, data)
        cache: dict = {}  # daily fits depend only on the data, share them
        for method in methods:
            for rh in rh_days_list:
                rep = run_rolling(system, data, method, rh,
                                  refit_window_days=refit_window_days,
                                  k_max=k_max, refine=refine,
                                  method_params=method_params,
                                  model_cache=cache)
                table.rows.append(
                    ComparisonRow(method, rh, sample, rep.total_cost, pi))
    return table
