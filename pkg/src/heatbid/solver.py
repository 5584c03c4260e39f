"""Generic MILP container and exact solving.

Problems are small (a few thousand variables at the longest planning
horizon), so everything is kept dense-friendly: named variables, sparse
constraint rows as dicts, and the HiGHS engine behind scipy for the
actual pivoting and branch-and-bound. Solutions are always re-verified
against the problem before they are returned; an external solver's claim
is never trusted.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

from .exceptions import InfeasiblePoint, ParseError

FEAS_TOL = 1e-6
DEFAULT_GAP = 1e-6

CONTINUOUS = "continuous"
BINARY = "binary"

LE, EQ, GE = "<=", "=", ">="


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    ITERATION_LIMIT = "iteration_limit"


@dataclass
class Variable:
    name: str
    lb: float
    ub: float
    kind: str = CONTINUOUS
    obj: float = 0.0


@dataclass
class Constraint:
    name: str
    coeffs: dict[str, float]
    sense: str
    rhs: float


@dataclass
class MilpSolution:
    status: SolveStatus
    objective: float
    values: dict[str, float]
    gap: float

    def __getitem__(self, name: str) -> float:
        return self.values[name]


class MilpProblem:
    """A minimization MILP with named variables and constraints."""

    def __init__(self, name: str = "heatbid"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self._index: dict[str, int] = {}

    def add_variable(self, name, lb=0.0, ub=0.0, kind=CONTINUOUS, obj=0.0) -> int:
        if name in self._index:
            raise ValueError(f"duplicate variable name {name!r}")
        if not (np.isfinite(lb) and np.isfinite(ub)) or lb > ub:
            raise ValueError(f"bad bounds [{lb}, {ub}] for {name!r}")
        if kind == BINARY and (lb < 0.0 or ub > 1.0):
            raise ValueError(f"binary {name!r} must have bounds within [0, 1]")
        self._index[name] = len(self.variables)
        self.variables.append(Variable(name, float(lb), float(ub), kind, float(obj)))
        return self._index[name]

    def add_constraint(self, name, coeffs: dict[str, float], sense: str, rhs: float):
        if sense not in (LE, EQ, GE):
            raise ValueError(f"bad sense {sense!r}")
        for var in coeffs:
            if var not in self._index:
                raise ValueError(f"constraint {name!r} references unknown {var!r}")
        self.constraints.append(Constraint(name, dict(coeffs), sense, float(rhs)))

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def binary_names(self) -> list[str]:
        return [v.name for v in self.variables if v.kind == BINARY]

    def index_of(self, name: str) -> int:
        return self._index[name]

    def objective_value(self, values: dict[str, float]) -> float:
        return float(sum(v.obj * values.get(v.name, 0.0) for v in self.variables))

    def max_violation(self, values: dict[str, float]) -> float:
        """Largest constraint/bound violation of a point (0 if feasible)."""
        worst = 0.0
        for v in self.variables:
            x = values.get(v.name, 0.0)
            worst = max(worst, v.lb - x, x - v.ub)
        for c in self.constraints:
            lhs = sum(a * values.get(n, 0.0) for n, a in c.coeffs.items())
            if c.sense == LE:
                worst = max(worst, lhs - c.rhs)
            elif c.sense == GE:
                worst = max(worst, c.rhs - lhs)
            else:
                worst = max(worst, abs(lhs - c.rhs))
        return worst

    # -- matrix assembly -------------------------------------------------

    def _arrays(self):
        n = self.n_variables
        c = np.array([v.obj for v in self.variables])
        lb = np.array([v.lb for v in self.variables])
        ub = np.array([v.ub for v in self.variables])
        integrality = np.array(
            [1 if v.kind == BINARY else 0 for v in self.variables]
        )
        rows, cols, vals = [], [], []
        lo = np.empty(len(self.constraints))
        hi = np.empty(len(self.constraints))
        for i, con in enumerate(self.constraints):
            for var, coef in con.coeffs.items():
                rows.append(i)
                cols.append(self._index[var])
                vals.append(coef)
            if con.sense == LE:
                lo[i], hi[i] = -np.inf, con.rhs
            elif con.sense == GE:
                lo[i], hi[i] = con.rhs, np.inf
            else:
                lo[i], hi[i] = con.rhs, con.rhs
        a = sparse.csr_matrix(
            (vals, (rows, cols)), shape=(len(self.constraints), n)
        )
        return c, lb, ub, integrality, a, lo, hi


def _run_highs(problem: MilpProblem, integrality, gap_tol, node_limit, time_limit):
    c, lb, ub, _, a, lo, hi = problem._arrays()
    options = {"mip_rel_gap": gap_tol, "presolve": True}
    if node_limit is not None:
        options["node_limit"] = int(node_limit)
    if time_limit is not None:
        options["time_limit"] = float(time_limit)
    constraints = (
        LinearConstraint(a, lo, hi) if problem.constraints else ()
    )
    res = milp(
        c=c,
        constraints=constraints,
        integrality=integrality,
        bounds=Bounds(lb, ub),
        options=options,
    )
    if res.status == 2:
        # HiGHS presolve occasionally mislabels a feasible MILP as
        # infeasible; confirm the verdict with presolve disabled.
        res = milp(
            c=c,
            constraints=constraints,
            integrality=integrality,
            bounds=Bounds(lb, ub),
            options={**options, "presolve": False},
        )
    if res.status == 2:
        return MilpSolution(SolveStatus.INFEASIBLE, np.nan, {}, np.inf)
    if res.x is None:
        # limit hit without an incumbent, or numerical trouble
        return MilpSolution(SolveStatus.ITERATION_LIMIT, np.nan, {}, np.inf)
    values = {v.name: float(x) for v, x in zip(problem.variables, res.x)}
    objective = problem.objective_value(values)
    gap = float(res.mip_gap) if getattr(res, "mip_gap", None) is not None else 0.0
    status = SolveStatus.OPTIMAL if res.status == 0 else SolveStatus.ITERATION_LIMIT
    if status is SolveStatus.OPTIMAL and problem.max_violation(values) > FEAS_TOL:
        status = SolveStatus.ITERATION_LIMIT
    return MilpSolution(status, objective, values, gap)


def solve_lp(problem: MilpProblem, time_limit=None) -> MilpSolution:
    """Solve the LP relaxation (binaries treated as continuous)."""
    integrality = np.zeros(problem.n_variables)
    return _run_highs(problem, integrality, DEFAULT_GAP, None, time_limit)


def solve_milp(
    problem: MilpProblem,
    gap_tol: float = DEFAULT_GAP,
    node_limit: int | None = None,
    time_limit: float | None = None,
) -> MilpSolution:
    """Solve the MILP to proven optimality within ``gap_tol``."""
    _, _, _, integrality, _, _, _ = problem._arrays()
    return _run_highs(problem, integrality, gap_tol, node_limit, time_limit)


PLANNING_GAP = 1e-4
PLANNING_NODE_LIMIT = 1000


def solve_planning(
    problem: MilpProblem,
    gap_tol: float = PLANNING_GAP,
    node_limit: int = PLANNING_NODE_LIMIT,
) -> MilpSolution:
    """Bounded-search solve for day-to-day planning problems.

    Returns OPTIMAL when proven within ``gap_tol``. If the node budget
    runs out first, the best feasible incumbent is returned with status
    FEASIBLE: on storage-coupled portfolios with several identical units
    the dual bound can stall long after the optimum is found, and a
    planning caller needs a good plan more than a certificate. The node
    budget makes termination deterministic, unlike a wall-clock limit.
    """
    sol = _run_highs(problem, problem._arrays()[3], gap_tol, node_limit, None)
    if (
        sol.status is SolveStatus.ITERATION_LIMIT
        and sol.values
        and problem.max_violation(sol.values) <= FEAS_TOL
    ):
        return MilpSolution(SolveStatus.FEASIBLE, sol.objective, sol.values, sol.gap)
    return sol


# -- MPS export ----------------------------------------------------------


def _num(x: float) -> str:
    return format(x, ".12g")


def write_mps(problem: MilpProblem) -> str:
    """Serialize to free-format MPS (ROWS/COLUMNS/RHS/BOUNDS/ENDATA).

    Binaries are wrapped in INTORG/INTEND markers. Variable and row order
    follows insertion order, so output is bit-identical across runs.
    """
    out = [f"NAME {problem.name}", "ROWS", " N OBJ"]
    sense_tag = {LE: "L", EQ: "E", GE: "G"}
    for con in problem.constraints:
        out.append(f" {sense_tag[con.sense]} {con.name}")
    out.append("COLUMNS")
    # entries grouped per column, in row order
    by_col: dict[str, list[tuple[str, float]]] = {v.name: [] for v in problem.variables}
    for v in problem.variables:
        if v.obj != 0.0:
            by_col[v.name].append(("OBJ", v.obj))
    for con in problem.constraints:
        for var, coef in con.coeffs.items():
            by_col[var].append((con.name, coef))
    marker = 0
    in_int = False
    for v in problem.variables:
        want_int = v.kind == BINARY
        if want_int != in_int:
            tag = "'INTORG'" if want_int else "'INTEND'"
            out.append(f" MARKER{marker} 'MARKER' {tag}")
            marker += 1
            in_int = want_int
        for row, coef in by_col[v.name]:
            out.append(f" {v.name} {row} {_num(coef)}")
    if in_int:
        out.append(f" MARKER{marker} 'MARKER' 'INTEND'")
    out.append("RHS")
    for con in problem.constraints:
        if con.rhs != 0.0:
            out.append(f" RHS {con.name} {_num(con.rhs)}")
    out.append("BOUNDS")
    for v in problem.variables:
        if v.lb == v.ub:
            out.append(f" FX BND {v.name} {_num(v.lb)}")
        else:
            out.append(f" LO BND {v.name} {_num(v.lb)}")
            out.append(f" UP BND {v.name} {_num(v.ub)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


# -- external solution import --------------------------------------------


def read_external_solution(problem: MilpProblem, text: str) -> MilpSolution:
    """Parse a ``name value`` solution file and verify it against the problem.

    Line 1 must read ``objective <value>``; subsequent lines are
    ``<varname> <value>``. ``#`` comments and blank lines are ignored.
    Missing variables default to 0. The point is re-verified: feasibility
    within 1e-6 and the stated objective against re-evaluation.
    """
    lines = [
        ln.split("#", 1)[0].strip()
        for ln in text.splitlines()
    ]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ParseError("empty solution file")
    head = lines[0].split()
    if len(head) != 2 or head[0].lower() != "objective":
        raise ParseError(f"expected 'objective <value>' on line 1, got {lines[0]!r}")
    try:
        stated = float(head[1])
    except ValueError as exc:
        raise ParseError(f"bad objective value {head[1]!r}") from exc
    values = {v.name: 0.0 for v in problem.variables}
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ParseError(f"expected '<varname> <value>', got {ln!r}")
        name, raw = parts
        if name not in values:
            raise ParseError(f"unknown variable {name!r}")
        try:
            values[name] = float(raw)
        except ValueError as exc:
            raise ParseError(f"bad value {raw!r} for {name!r}") from exc
    violation = problem.max_violation(values)
    if violation > FEAS_TOL:
        raise InfeasiblePoint(f"max constraint violation {violation:.3e}")
    objective = problem.objective_value(values)
    if abs(objective - stated) > FEAS_TOL * max(1.0, abs(objective)):
        raise ParseError(
            f"stated objective {stated} differs from re-evaluated {objective}"
        )
    return MilpSolution(SolveStatus.OPTIMAL, objective, values, 0.0)
