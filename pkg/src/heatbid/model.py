"""Domain types of the district-heating portfolio and the operational MILP.

The planning problem schedules CHP units, heat-only boilers and one
thermal storage over an hourly horizon: heat balance against demand,
storage bookkeeping, unit capacities and the heat/power coupling of the
CHP units. The objective charges heat production at unit cost and
credits expected electricity revenue for the CHP units.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .exceptions import (
    ConfigError,
    InfeasibleFloor,
    IntegralityViolation,
    LengthMismatch,
    NotOptimal,
    UnknownUnit,
)
from .solver import BINARY, EQ, GE, LE, MilpProblem, MilpSolution, SolveStatus

PLAN_TOL = 1e-6
SLACK_PENALTY = 1e6


class UnitKind(Enum):
    CHP = "chp"
    HEAT_ONLY = "heat_only"


class Mode(Enum):
    FULL_LOAD = "full_load"
    PARTIAL_LOAD = "partial_load"


@dataclass(frozen=True)
class Unit:
    """One production unit; power fields apply to CHP units only."""

    id: str
    kind: UnitKind
    cost_heat: float
    q_max: float
    p_min: float = 0.0
    p_max: float = 0.0
    phi: float = 0.0
    connected_dh: bool = False
    connected_storage: bool = False

    def __post_init__(self):
        if self.q_max <= 0:
            raise ConfigError(f"{self.id}: q_max must be positive")
        if self.cost_heat < 0:
            raise ConfigError(f"{self.id}: cost_heat must be nonnegative")
        if not (self.connected_dh or self.connected_storage):
            raise ConfigError(f"{self.id}: unit feeds neither grid nor storage")
        if self.kind is UnitKind.CHP:
            if not (0 <= self.p_min <= self.p_max):
                raise ConfigError(f"{self.id}: need 0 <= p_min <= p_max")
            if self.phi <= 0:
                raise ConfigError(f"{self.id}: CHP needs phi > 0")
            if self.q_max < self.phi * self.p_max - 1e-9:
                raise ConfigError(
                    f"{self.id}: q_max below phi * p_max (heat capacity "
                    "inconsistent with power capacity)"
                )

    @property
    def is_chp(self) -> bool:
        return self.kind is UnitKind.CHP


@dataclass(frozen=True)
class StorageSpec:
    s_max: float
    s_min: float
    flow_max: float
    s_initial: float

    def __post_init__(self):
        if not (self.s_min <= self.s_initial <= self.s_max):
            raise ConfigError("storage: need s_min <= s_initial <= s_max")
        if self.flow_max < 0:
            raise ConfigError("storage: flow_max must be nonnegative")


@dataclass(frozen=True)
class SystemConfig:
    units: tuple[Unit, ...]
    storage: StorageSpec
    mode: Mode = Mode.FULL_LOAD

    def __post_init__(self):
        ids = [u.id for u in self.units]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate unit ids")

    @property
    def chp_units(self) -> list[Unit]:
        return [u for u in self.units if u.is_chp]

    @property
    def heat_only_units(self) -> list[Unit]:
        return [u for u in self.units if not u.is_chp]

    def unit(self, unit_id: str) -> Unit:
        for u in self.units:
            if u.id == unit_id:
                return u
        raise UnknownUnit(unit_id)

    def with_initial_storage(self, s0: float) -> "SystemConfig":
        return replace(self, storage=replace(self.storage, s_initial=s0))


@dataclass(frozen=True)
class Horizon:
    """Hourly planning horizon; bids always cover the first 24 hours."""

    n_periods: int

    def __post_init__(self):
        if self.n_periods < 24 or self.n_periods % 24 != 0:
            raise ConfigError("n_periods must be a positive multiple of 24")

    @property
    def bid_day_periods(self) -> range:
        return range(1, 25)


@dataclass(frozen=True)
class HourlySeries:
    """An hourly series anchored at an absolute hour index."""

    values: np.ndarray
    start_hour: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    def __len__(self) -> int:
        return len(self.values)

    def slice(self, offset: int, n: int) -> "HourlySeries":
        return HourlySeries(self.values[offset : offset + n], self.start_hour + offset)


# Prices in money per MWh-el, demand in MWh-heat; same container.
PriceSeries = HourlySeries
DemandSeries = HourlySeries


@dataclass
class ProductionFloor:
    """Per-unit, per-period minimum heat production; missing units are 0."""

    floors: dict[str, np.ndarray] = field(default_factory=dict)

    def get(self, unit_id: str, n_periods: int) -> np.ndarray:
        arr = self.floors.get(unit_id)
        if arr is None:
            return np.zeros(n_periods)
        return np.asarray(arr, dtype=float)


@dataclass
class DispatchPlan:
    """Solved operation: per-unit heat/power and the storage trajectory."""

    unit_ids: list[str]
    q: dict[str, np.ndarray]
    q_dh: dict[str, np.ndarray]
    q_s: dict[str, np.ndarray]
    p: dict[str, np.ndarray]
    on: dict[str, np.ndarray]
    s_level: np.ndarray
    s_out: np.ndarray
    shortage: np.ndarray
    dump: np.ndarray

    @property
    def n_periods(self) -> int:
        return len(self.s_level)


@dataclass
class ValidationReport:
    ok: bool
    uncovered_periods: list[int]
    messages: list[str]


def validate_system(system: SystemConfig, demand: DemandSeries) -> ValidationReport:
    """Check the standing assumption that heat-only capacity covers demand.

    Report-only: flags every period where heat-only capacity plus the
    storage outflow limit falls short of demand, plus any bad demand data.
    """
    messages = []
    heat_only_cap = sum(u.q_max for u in system.heat_only_units)
    cap = heat_only_cap + system.storage.flow_max
    uncovered = [t for t, d in enumerate(demand.values) if cap < d - PLAN_TOL]
    if uncovered:
        messages.append(
            f"heat-only capacity {cap:g} cannot cover demand in "
            f"{len(uncovered)} period(s)"
        )
    bad = np.flatnonzero(demand.values < 0)
    if bad.size:
        messages.append(f"negative demand in periods {bad.tolist()}")
    return ValidationReport(not messages, uncovered, messages)


def _check_series(horizon: Horizon, prices, demand):
    if len(prices) != horizon.n_periods:
        raise LengthMismatch(
            f"price series length {len(prices)} != horizon {horizon.n_periods}"
        )
    if len(demand) != horizon.n_periods:
        raise LengthMismatch(
            f"demand series length {len(demand)} != horizon {horizon.n_periods}"
        )


def build_operational_milp(
    system: SystemConfig,
    horizon: Horizon,
    prices: PriceSeries,
    demand: DemandSeries,
    floors: ProductionFloor | None = None,
    unit_filter: set[str] | None = None,
    *,
    slack: bool = False,
    power_fix: dict[tuple[str, int], float] | None = None,
    end_anchor: bool = True,
    name: str = "ops",
) -> MilpProblem:
    """Assemble the operational MILP for the given horizon.

    ``unit_filter`` restricts the portfolio to a subset of units (the
    storage always stays). ``slack`` adds per-period shortage/dump
    variables on the heat balance at a prohibitive penalty, as an
    explicit opt-in for callers that must survive forced production or
    forced commitments. ``power_fix`` pins CHP power (and on/off status)
    in selected periods, keyed by (unit id, 0-based period).
    ``end_anchor`` controls the requirement that the final storage level
    returns to at least the initial level; evaluation references that
    only lower-bound other runs switch it off.
    """
    _check_series(horizon, prices, demand)
    floors = floors or ProductionFloor()
    power_fix = power_fix or {}
    all_ids = {u.id for u in system.units}
    if unit_filter is None:
        included = list(system.units)
    else:
        unknown = unit_filter - all_ids
        if unknown:
            raise UnknownUnit(", ".join(sorted(unknown)))
        included = [u for u in system.units if u.id in unit_filter]
    included_ids = {u.id for u in included}
    for uid in floors.floors:
        if uid not in included_ids:
            raise UnknownUnit(f"floor on excluded unit {uid}")

    n = horizon.n_periods
    lam = prices.values
    dem = demand.values
    sto = system.storage
    prob = MilpProblem(name)
    prob.meta = {
        "system": system,
        "horizon": horizon,
        "included": [u.id for u in included],
        "slack": slack,
    }

    for u in included:
        floor = floors.get(u.id, n)
        if len(floor) != n:
            raise LengthMismatch(f"floor length for {u.id}")
        if np.any(floor > u.q_max + 1e-9):
            raise InfeasibleFloor(f"floor exceeds q_max for {u.id}")
        if np.any(floor < -1e-9):
            raise InfeasibleFloor(f"negative floor for {u.id}")
        dh_cap = u.q_max if u.connected_dh else 0.0
        st_cap = u.q_max if u.connected_storage else 0.0
        for t in range(n):
            obj_q = 0.0 if u.is_chp else u.cost_heat
            prob.add_variable(f"q[{u.id},{t}]", min(floor[t], u.q_max), u.q_max, obj=obj_q)
            prob.add_variable(f"qdh[{u.id},{t}]", 0.0, dh_cap)
            prob.add_variable(f"qs[{u.id},{t}]", 0.0, st_cap)
            if u.is_chp:
                fix = power_fix.get((u.id, t))
                if fix is None:
                    prob.add_variable(f"p[{u.id},{t}]", 0.0, u.p_max,
                                      obj=u.cost_heat * u.phi - lam[t])
                    prob.add_variable(f"x[{u.id},{t}]", 0.0, 1.0, kind=BINARY)
                else:
                    on = 1.0 if fix > 0 else 0.0
                    prob.add_variable(f"p[{u.id},{t}]", fix, fix,
                                      obj=u.cost_heat * u.phi - lam[t])
                    prob.add_variable(f"x[{u.id},{t}]", on, on, kind=BINARY)
    for t in range(n):
        prob.add_variable(f"s[{t}]", sto.s_min, sto.s_max)
        prob.add_variable(f"sout[{t}]", 0.0, sto.flow_max)
        if slack:
            prob.add_variable(f"short[{t}]", 0.0, max(dem) + 1.0, obj=SLACK_PENALTY)
            prob.add_variable(f"dump[{t}]", 0.0, sto.flow_max + sum(u.q_max for u in included) + 1.0,
                              obj=SLACK_PENALTY)

    for u in included:
        p_lo = u.p_max if system.mode is Mode.FULL_LOAD else u.p_min
        for t in range(n):
            prob.add_constraint(
                f"split[{u.id},{t}]",
                {f"q[{u.id},{t}]": 1.0, f"qdh[{u.id},{t}]": -1.0, f"qs[{u.id},{t}]": -1.0},
                EQ, 0.0,
            )
            if u.is_chp:
                prob.add_constraint(
                    f"h2p[{u.id},{t}]",
                    {f"q[{u.id},{t}]": 1.0, f"p[{u.id},{t}]": -u.phi},
                    EQ, 0.0,
                )
                if (u.id, t) not in (power_fix or {}):
                    prob.add_constraint(
                        f"pmin[{u.id},{t}]",
                        {f"p[{u.id},{t}]": 1.0, f"x[{u.id},{t}]": -p_lo},
                        GE, 0.0,
                    )
                    prob.add_constraint(
                        f"pmax[{u.id},{t}]",
                        {f"p[{u.id},{t}]": 1.0, f"x[{u.id},{t}]": -u.p_max},
                        LE, 0.0,
                    )

    for t in range(n):
        level = {f"s[{t}]": 1.0, f"sout[{t}]": 1.0}
        for u in included:
            level[f"qs[{u.id},{t}]"] = -1.0
        if t == 0:
            prob.add_constraint(f"slevel[{t}]", level, EQ, sto.s_initial)
        else:
            level[f"s[{t - 1}]"] = -1.0
            prob.add_constraint(f"slevel[{t}]", level, EQ, 0.0)
        if included:
            prob.add_constraint(
                f"inflow[{t}]",
                {f"qs[{u.id},{t}]": 1.0 for u in included},
                LE, sto.flow_max,
            )
        balance = {f"qdh[{u.id},{t}]": 1.0 for u in included}
        balance[f"sout[{t}]"] = 1.0
        if slack:
            balance[f"short[{t}]"] = 1.0
            balance[f"dump[{t}]"] = -1.0
        prob.add_constraint(f"balance[{t}]", balance, EQ, dem[t])
    if end_anchor:
        prob.add_constraint("endlevel", {f"s[{n - 1}]": 1.0}, GE, sto.s_initial)

    # Interchangeable CHP units make the branch-and-bound tree explode:
    # any per-period swap of two identical units is a distinct but
    # equivalent solution. Ordering their on/off variables removes those
    # duplicates without cutting off any objective value. Units are
    # interchangeable only if every parameter matches; a period is
    # skipped when a power fix or differing floors tell them apart.
    groups: dict[tuple, list[Unit]] = {}
    for u in included:
        if u.is_chp:
            key = (u.cost_heat, u.q_max, u.p_min, u.p_max, u.phi,
                   u.connected_dh, u.connected_storage)
            groups.setdefault(key, []).append(u)
    for members in groups.values():
        members.sort(key=lambda u: u.id)
        for a, b in zip(members, members[1:]):
            floor_a = floors.get(a.id, n)
            floor_b = floors.get(b.id, n)
            for t in range(n):
                if (a.id, t) in power_fix or (b.id, t) in power_fix:
                    continue
                if floor_a[t] != floor_b[t]:
                    continue
                prob.add_constraint(
                    f"order[{b.id},{t}]",
                    {f"x[{b.id},{t}]": 1.0, f"x[{a.id},{t}]": -1.0},
                    LE, 0.0,
                )
    return prob


def extract_dispatch(problem: MilpProblem, solution: MilpSolution) -> DispatchPlan:
    """Map a solved problem's variable values back to named dispatch fields."""
    if solution.status not in (SolveStatus.OPTIMAL, SolveStatus.FEASIBLE):
        raise NotOptimal(f"solution status is {solution.status.value}")
    meta = getattr(problem, "meta", None)
    if meta is None:
        raise ValueError("problem was not built by build_operational_milp")
    system: SystemConfig = meta["system"]
    n = meta["horizon"].n_periods
    included = meta["included"]
    vals = solution.values

    def series(prefix, uid):
        return np.array([vals[f"{prefix}[{uid},{t}]"] for t in range(n)])

    q, q_dh, q_s, p, on = {}, {}, {}, {}, {}
    for uid in included:
        q[uid] = series("q", uid)
        q_dh[uid] = series("qdh", uid)
        q_s[uid] = series("qs", uid)
        if system.unit(uid).is_chp:
            p[uid] = series("p", uid)
            raw = series("x", uid)
            rounded = np.round(raw)
            if np.any(np.abs(raw - rounded) > PLAN_TOL):
                raise IntegralityViolation(
                    f"binary status of {uid} not within {PLAN_TOL} of 0/1"
                )
            on[uid] = rounded
    s_level = np.array([vals[f"s[{t}]"] for t in range(n)])
    s_out = np.array([vals[f"sout[{t}]"] for t in range(n)])
    if meta["slack"]:
        shortage = np.array([vals[f"short[{t}]"] for t in range(n)])
        dump = np.array([vals[f"dump[{t}]"] for t in range(n)])
    else:
        shortage = np.zeros(n)
        dump = np.zeros(n)
    return DispatchPlan(list(included), q, q_dh, q_s, p, on, s_level, s_out,
                        shortage, dump)


def dispatch_cost(plan: DispatchPlan, system: SystemConfig,
                  prices: PriceSeries) -> float:
    """Operating cost of a plan: heat at unit cost minus power revenue."""
    n = plan.n_periods
    if len(prices) != n:
        raise LengthMismatch(f"price series length {len(prices)} != plan {n}")
    lam = prices.values
    total = 0.0
    for uid in plan.unit_ids:
        u = system.unit(uid)
        if u.is_chp:
            total += float(np.sum((u.cost_heat * u.phi - lam) * plan.p[uid]))
        else:
            total += float(u.cost_heat * np.sum(plan.q[uid]))
    return total
