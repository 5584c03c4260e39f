"""Heat-replacement bidding: build day-ahead offers by iteratively letting
CHP production take over the duty of heat-only boilers.

The driver first plans the day with no market at all, freezing each
boiler's heat duty. It then walks the boilers from most to least
expensive: each round drops one boiler, floors the remaining ones at
their frozen duty, re-plans, and offers the extra CHP power at the
cost-indifference price between the CHP and the dropped boiler. Offers
from earlier rounds always stay in the book.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .exceptions import HeatbidError, InfeasibleProblem, NoHeatOnly, ParseError, WrongKind
from .model import (
    DemandSeries,
    DispatchPlan,
    Horizon,
    PriceSeries,
    ProductionFloor,
    SystemConfig,
    Unit,
    UnitKind,
    build_operational_milp,
    extract_dispatch,
)
from .solver import SolveStatus, solve_planning

AMOUNT_TOL = 1e-4
MARKET_PRICE_FLOOR = -500.0
SHORTAGE_TOL = 1e-6


@dataclass(frozen=True)
class Offer:
    unit: str
    hour: int  # 1..24
    price: float
    amount: float
    iteration: int = 0
    replaced_unit: str = ""


@dataclass
class OfferSet:
    offers: list[Offer] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.offers)

    def __iter__(self):
        return iter(self.offers)

    def add(self, offer: Offer):
        self.offers.append(offer)

    def cumulative(self) -> dict[tuple[str, int], float]:
        """Total offered amount per (unit, hour)."""
        acc: dict[tuple[str, int], float] = {}
        for o in self.offers:
            key = (o.unit, o.hour)
            acc[key] = acc.get(key, 0.0) + o.amount
        return acc

    def for_hour(self, unit: str, hour: int) -> list[Offer]:
        return [o for o in self.offers if o.unit == unit and o.hour == hour]

    def hours_with_offers(self, unit: str) -> set[int]:
        return {o.hour for o in self.offers if o.unit == unit}

    def validate(self, system: SystemConfig):
        """Structural checks shared by every bidding method."""
        for o in self.offers:
            if o.amount <= 0:
                raise HeatbidError(f"nonpositive offer amount {o.amount}")
            if not 1 <= o.hour <= 24:
                raise HeatbidError(f"offer hour {o.hour} outside bid day")
        for (uid, _), total in self.cumulative().items():
            p_max = system.unit(uid).p_max
            if total > p_max + AMOUNT_TOL:
                raise HeatbidError(
                    f"cumulative amount {total:g} for {uid} exceeds p_max {p_max:g}"
                )

    # -- CSV wire format: unit,hour,price,amount,iteration,replaced_unit --

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("unit,hour,price,amount,iteration,replaced_unit\n")
        for o in self.offers:
            buf.write(
                f"{o.unit},{o.hour},{o.price:.6f},{o.amount:.6f},"
                f"{o.iteration},{o.replaced_unit}\n"
            )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "OfferSet":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != "unit,hour,price,amount,iteration,replaced_unit":
            raise ParseError("bad offer CSV header")
        offers = []
        for ln in lines[1:]:
            parts = ln.split(",")
            if len(parts) != 6:
                raise ParseError(f"bad offer CSV line {ln!r}")
            offers.append(Offer(parts[0], int(parts[1]), float(parts[2]),
                                float(parts[3]), int(parts[4]), parts[5]))
        return cls(offers)


def bidding_price(chp: Unit, replaced: Unit) -> float:
    """Cost-indifference price for replacing a boiler's heat with CHP power."""
    if chp.kind is not UnitKind.CHP:
        raise WrongKind(f"{chp.id} is not a CHP unit")
    if replaced.kind is not UnitKind.HEAT_ONLY:
        raise WrongKind(f"{replaced.id} is not a heat-only unit")
    return (chp.cost_heat - replaced.cost_heat) * chp.phi


def sort_heat_only(units: list[Unit]) -> list[Unit]:
    """Heat-only units by descending cost, ties broken by id."""
    for u in units:
        if u.kind is not UnitKind.HEAT_ONLY:
            raise WrongKind(f"{u.id} is not a heat-only unit")
    return sorted(units, key=lambda u: (-u.cost_heat, u.id))


@dataclass
class ReplacementIteration:
    index: int
    removed: Unit
    plan: DispatchPlan
    shortage: np.ndarray  # per-period shortage slack, all zero when feasible


def _solve_plan(system, horizon, prices, demand, floors, unit_filter, *,
                allow_slack: bool, label: str):
    prob = build_operational_milp(system, horizon, prices, demand, floors,
                                  unit_filter, name=label)
    sol = solve_planning(prob)
    if sol.status in (SolveStatus.OPTIMAL, SolveStatus.FEASIBLE):
        return extract_dispatch(prob, sol)
    if sol.status is SolveStatus.INFEASIBLE and allow_slack:
        prob = build_operational_milp(system, horizon, prices, demand, floors,
                                      unit_filter, slack=True, name=label)
        sol = solve_planning(prob)
        if sol.status in (SolveStatus.OPTIMAL, SolveStatus.FEASIBLE):
            return extract_dispatch(prob, sol)
    raise InfeasibleProblem(f"{label}: status {sol.status.value}")


def replacement_iterations(
    system: SystemConfig,
    horizon: Horizon,
    forecast: PriceSeries,
    demand: DemandSeries,
    s0: float,
) -> tuple[DispatchPlan, list[ReplacementIteration]]:
    """Run the replacement loop; returns the no-market plan and one entry
    per dropped boiler."""
    chp_ids = {u.id for u in system.chp_units}
    if not chp_ids:
        raise NoHeatOnly("no CHP units to bid with")
    heat_only = system.heat_only_units
    if not heat_only:
        raise NoHeatOnly("no heat-only units to replace")
    sysd = system.with_initial_storage(s0)
    n = horizon.n_periods

    zero = PriceSeries(np.zeros(n), forecast.start_hour)
    base_plan = _solve_plan(sysd, horizon, zero, demand, None, None,
                            allow_slack=False, label="no-market")
    q_star = {u.id: base_plan.q[u.id] for u in heat_only}

    iterations = []
    remaining = [u.id for u in sort_heat_only(heat_only)]
    for i, removed_id in enumerate(list(remaining), start=1):
        remaining.remove(removed_id)
        floors = ProductionFloor({uid: q_star[uid] for uid in remaining})
        unit_filter = chp_ids | set(remaining)
        plan = _solve_plan(sysd, horizon, forecast, demand, floors, unit_filter,
                           allow_slack=True, label=f"iteration {i}")
        iterations.append(
            ReplacementIteration(i, system.unit(removed_id), plan, plan.shortage)
        )
    return base_plan, iterations


def generate_bids(
    system: SystemConfig,
    horizon: Horizon,
    forecast: PriceSeries,
    demand: DemandSeries,
    s0: float,
    *,
    market_floor: float = MARKET_PRICE_FLOOR,
    amount_tol: float = AMOUNT_TOL,
) -> OfferSet:
    """Produce the day-ahead offer book for the first 24 hours."""
    _, iterations = replacement_iterations(system, horizon, forecast, demand, s0)
    chp_units = system.chp_units
    offers = OfferSet()
    k = {(u.id, t): 0.0 for u in chp_units for t in range(24)}
    for it in iterations:
        for u in chp_units:
            price = max(bidding_price(u, it.removed), market_floor)
            for t in range(24):
                if it.shortage[t] > SHORTAGE_TOL:
                    continue  # unmet heat in this period, production is not market-driven
                amount = it.plan.p[u.id][t] - k[(u.id, t)]
                if amount > amount_tol:
                    offers.add(Offer(u.id, t + 1, price, amount, it.index,
                                     it.removed.id))
                k[(u.id, t)] += amount
    offers.validate(system)
    return offers


def bid_curve(offers: OfferSet, unit: str, hour: int) -> list[tuple[float, float]]:
    """Stepwise (price, cumulative amount) curve for one unit-hour,
    sorted by price ascending."""
    steps = sorted(offers.for_hour(unit, hour), key=lambda o: o.price)
    curve = []
    total = 0.0
    for o in steps:
        total += o.amount
        curve.append((o.price, total))
    return curve
