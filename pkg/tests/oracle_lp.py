"""Self-contained reference solvers used only by the tests.

A dense two-phase tableau simplex plus a brute-force binary enumeration,
written directly against the problem container so results do not depend
on the production solve path. Only suitable for the tiny problems the
tests build.
"""

from __future__ import annotations

import itertools

import numpy as np

TOL = 1e-9


def simplex_lp(c, A_ub, b_ub, A_eq, b_eq, lb, ub):
    """Minimise c'x subject to A_ub x <= b_ub, A_eq x = b_eq,
    lb <= x <= ub (finite bounds). Returns (status, x, objective) with
    status in {"optimal", "infeasible"}."""
    c = np.asarray(c, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    n = len(c)
    A_ub = np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.asarray(b_ub, dtype=float)
    A_eq = np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.asarray(b_eq, dtype=float)

    # shift to y = x - lb >= 0 and fold upper bounds into <= rows
    b_ub = b_ub - A_ub @ lb
    b_eq = b_eq - A_eq @ lb
    span = ub - lb
    if np.any(span < -TOL):
        return "infeasible", None, None
    eye = np.eye(n)
    A_le = np.vstack([A_ub, eye])
    b_le = np.concatenate([b_ub, span])

    # standard form with slacks: [A_le I; A_eq 0] z = [b_le; b_eq]
    m_le, m_eq = len(b_le), len(b_eq)
    m = m_le + m_eq
    A = np.zeros((m, n + m_le))
    A[:m_le, :n] = A_le
    A[:m_le, n:] = np.eye(m_le)
    A[m_le:, :n] = A_eq
    b = np.concatenate([b_le, b_eq])
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    total = n + m_le

    # phase 1: artificial basis
    T = np.zeros((m + 1, total + m + 1))
    T[:m, :total] = A
    T[:m, total:total + m] = np.eye(m)
    T[:m, -1] = b
    T[m, total:total + m] = 1.0
    basis = list(range(total, total + m))
    T[m] -= T[:m].sum(axis=0)
    _pivot_until_optimal(T, basis)
    if T[m, -1] < -1e-7:
        return "infeasible", None, None
    # drive remaining artificials out of the basis when possible
    for row, bv in enumerate(basis):
        if bv >= total:
            cols = np.nonzero(np.abs(T[row, :total]) > TOL)[0]
            if len(cols):
                _pivot(T, basis, row, cols[0])

    # phase 2
    T2 = np.zeros((m + 1, total + 1))
    T2[:m, :total] = T[:m, :total]
    T2[:m, -1] = T[:m, -1]
    cost = np.zeros(total)
    cost[:n] = c
    T2[m, :total] = cost
    for row, bv in enumerate(basis):
        if bv < total:
            T2[m] -= cost[bv] * T2[row]
    _pivot_until_optimal(T2, basis, active=total)
    x = np.zeros(total)
    for row, bv in enumerate(basis):
        if bv < total:
            x[bv] = T2[row, -1]
    sol = x[:n] + lb
    return "optimal", sol, float(c @ x[:n] + c @ lb)


def _pivot(T, basis, row, col):
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and abs(T[r, col]) > TOL:
            T[r] -= T[r, col] * T[row]
    basis[row] = col


def _pivot_until_optimal(T, basis, active=None):
    m = T.shape[0] - 1
    active = T.shape[1] - 1 if active is None else active
    for _ in range(20000):
        # Bland's rule: lowest-index entering column
        col = -1
        for j in range(active):
            if T[m, j] < -TOL:
                col = j
                break
        if col < 0:
            return
        ratios = [(T[r, -1] / T[r, col], basis[r], r)
                  for r in range(m) if T[r, col] > TOL]
        if not ratios:
            raise RuntimeError("unbounded LP in test oracle")
        _, _, row = min(ratios)
        _pivot(T, basis, row, col)
    raise RuntimeError("test oracle simplex did not converge")


def _problem_arrays(prob, fixed: dict[str, float]):
    names = [v.name for v in prob.variables]
    idx = {nm: i for i, nm in enumerate(names)}
    n = len(names)
    c = np.array([v.obj for v in prob.variables])
    lb = np.array([fixed.get(v.name, v.lb) for v in prob.variables])
    ub = np.array([fixed.get(v.name, v.ub) for v in prob.variables])
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for con in prob.constraints:
        row = np.zeros(n)
        for nm, a in con.coeffs.items():
            row[idx[nm]] = a
        if con.sense == "<=":
            A_ub.append(row)
            b_ub.append(con.rhs)
        elif con.sense == ">=":
            A_ub.append(-row)
            b_ub.append(-con.rhs)
        else:
            A_eq.append(row)
            b_eq.append(con.rhs)
    A_ub = np.array(A_ub).reshape(-1, n)
    A_eq = np.array(A_eq).reshape(-1, n)
    return c, A_ub, np.array(b_ub), A_eq, np.array(b_eq), lb, ub, names


def enumerate_milp(prob):
    """Brute-force reference: try every on/off assignment of the binary
    variables, solve the remaining LP with the tableau simplex, keep the
    best. Returns (status, values-dict, objective)."""
    fixed_bounds = {v.name: v.lb for v in prob.variables
                    if v.kind == "binary" and v.lb == v.ub}
    binaries = [b for b in prob.binary_names if b not in fixed_bounds]
    best_obj, best_x, best_names = None, None, None
    for bits in itertools.product((0.0, 1.0), repeat=len(binaries)):
        fixed = dict(zip(binaries, bits))
        c, A_ub, b_ub, A_eq, b_eq, lb, ub, names = _problem_arrays(prob, fixed)
        status, x, obj = simplex_lp(c, A_ub, b_ub, A_eq, b_eq, lb, ub)
        if status == "optimal" and (best_obj is None or obj < best_obj - 1e-12):
            best_obj, best_x, best_names = obj, x, names
    if best_obj is None:
        return "infeasible", None, None
    return "optimal", dict(zip(best_names, best_x)), best_obj


def parse_mps(text: str):
    """Minimal free-format MPS reader for the subset the exporter emits.

    Returns (objective dict, constraints list of (name, coeffs, sense,
    rhs), bounds dict name -> [lb, ub], integer-name set).
    """
    section = None
    senses: dict[str, str] = {}
    obj: dict[str, float] = {}
    coeffs: dict[str, dict[str, float]] = {}
    rhs: dict[str, float] = {}
    bounds: dict[str, list[float]] = {}
    integers: set[str] = set()
    order: list[str] = []
    in_int = False
    for line in text.splitlines():
        if not line.strip():
            continue
        if not line.startswith(" "):
            section = line.split()[0]
            continue
        parts = line.split()
        if section == "ROWS":
            tag, name = parts
            if tag != "N":
                senses[name] = {"L": "<=", "E": "=", "G": ">="}[tag]
                coeffs[name] = {}
                order.append(name)
        elif section == "COLUMNS":
            if len(parts) == 3 and parts[1] == "'MARKER'":
                in_int = parts[2] == "'INTORG'"
                continue
            var, row, value = parts
            bounds.setdefault(var, [0.0, 0.0])
            if in_int:
                integers.add(var)
            if row == "OBJ":
                obj[var] = float(value)
            else:
                coeffs[row][var] = float(value)
        elif section == "RHS":
            _, row, value = parts
            rhs[row] = float(value)
        elif section == "BOUNDS":
            tag, _, var, value = parts
            if tag == "FX":
                bounds[var] = [float(value), float(value)]
            elif tag == "LO":
                bounds[var][0] = float(value)
            elif tag == "UP":
                bounds[var][1] = float(value)
    cons = [(name, coeffs[name], senses[name], rhs.get(name, 0.0))
            for name in order]
    return obj, cons, bounds, integers


def solve_parsed_mps(text: str):
    """Parse an exported MPS file and solve it with the enumeration
    oracle; returns (status, objective)."""
    obj, cons, bounds, integers = parse_mps(text)

    class _P:
        pass

    class _V:
        def __init__(self, name, lb, ub, kind, c):
            self.name, self.lb, self.ub, self.kind, self.obj = name, lb, ub, kind, c

    class _C:
        def __init__(self, name, coeffs, sense, r):
            self.name, self.coeffs, self.sense, self.rhs = name, coeffs, sense, r

    prob = _P()
    prob.variables = [_V(n, lo, hi, "binary" if n in integers else "continuous",
                         obj.get(n, 0.0)) for n, (lo, hi) in bounds.items()]
    prob.constraints = [_C(*c) for c in cons]
    prob.binary_names = sorted(integers)
    status, _, value = enumerate_milp(prob)
    return status, value
