"""Embedded MILP solver.

LP relaxations run on the bounded-variable simplex; integrality and indicator
constraints are enforced by branch and bound. Indicators stay symbolic: a
node's relaxation only includes an implied constraint once its binary is
pinned at the active value by bounds, so relaxations remain valid without
big-M conversion. Feasibility searches are depth-first (find a witness fast),
optimization uses best-bound (prove bounds fast) seeded by an LP-guided
rounding dive.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import simplex
from .errors import SolverError, ValidationError
from .milp import (
    BINARY,
    EQUAL,
    GREATER_EQUAL,
    INTEGER,
    LESS_EQUAL,
    MAXIMIZE,
    MINIMIZE,
    MilpModel,
)

SAT = "sat"
UNSAT = "unsat"
INCONCLUSIVE = "inconclusive"
UNBOUNDED = "unbounded"

FEASIBILITY = "feasibility"

DEFAULT_FEAS_TOL = 1e-6
DEFAULT_INT_TOL = 1e-6
DEFAULT_NODE_LIMIT = 1_000_000

_PIN_EPS = 1e-9


@dataclass
class LpOutcome:
    status: str  # optimal | infeasible | unbounded
    objective: float | None
    assignment: np.ndarray | None
    iterations: int = 0


@dataclass
class MilpStats:
    nodes: int = 0
    simplex_iterations: int = 0
    seconds: float = 0.0


@dataclass
class MilpOutcome:
    status: str  # sat | unsat | inconclusive | unbounded
    witness: np.ndarray | None
    objective: float | None
    stats: MilpStats = field(default_factory=MilpStats)


class _Relaxation:
    """Dense arrays for one model; nodes override bounds and append the
    implied rows of indicators pinned at their active value."""

    def __init__(self, model: MilpModel):
        n = len(model.variables)
        self.n = n
        self.lo = np.array([v.lower for v in model.variables], dtype=float)
        self.hi = np.array([v.upper for v in model.variables], dtype=float)
        self.int_vars = np.array(
            [v.index for v in model.variables if v.kind in (INTEGER, BINARY)], dtype=np.int64
        )
        lin = model.linear_constraints()
        self.a = np.zeros((len(lin), n))
        self.rhs = np.array([c.rhs for c in lin], dtype=float)
        for r, c in enumerate(lin):
            for coef, var in c.terms:
                self.a[r, var] = coef
        self.slack_lo, self.slack_hi = simplex.slack_bounds([c.relation for c in lin])

        inds = model.indicator_constraints()
        self.n_ind = len(inds)
        self.ind_bin = np.array([c.binary for c in inds], dtype=np.int64)
        self.ind_act = np.array([float(c.active_value) for c in inds])
        self.ind_mat = np.zeros((len(inds), n))
        self.ind_rhs = np.array([c.implied.rhs for c in inds], dtype=float)
        for k, c in enumerate(inds):
            for coef, var in c.implied.terms:
                self.ind_mat[k, var] = coef
        self.ind_slack_lo, self.ind_slack_hi = simplex.slack_bounds(
            [c.implied.relation for c in inds]
        )
        self.ind_le = np.array([c.implied.relation == LESS_EQUAL for c in inds])
        self.ind_ge = np.array([c.implied.relation == GREATER_EQUAL for c in inds])

    def pinned_active(self, lo, hi) -> np.ndarray:
        if self.n_ind == 0:
            return np.zeros(0, dtype=bool)
        b = self.ind_bin
        return (hi[b] - lo[b] <= _PIN_EPS) & (np.abs(lo[b] - self.ind_act) <= _PIN_EPS)

    def lp_inputs(self, lo, hi):
        pinned = self.pinned_active(lo, hi)
        if pinned.any():
            a = np.vstack([self.a, self.ind_mat[pinned]])
            rhs = np.concatenate([self.rhs, self.ind_rhs[pinned]])
            slo = np.concatenate([self.slack_lo, self.ind_slack_lo[pinned]])
            shi = np.concatenate([self.slack_hi, self.ind_slack_hi[pinned]])
            return a, slo, shi, rhs
        return self.a, self.slack_lo, self.slack_hi, self.rhs

    def indicator_violations(self, x, lo, hi, int_tol, feas_tol) -> np.ndarray:
        """Indices of indicators whose binary sits at the active value while
        the implied constraint is broken (ignoring already-pinned ones),
        ordered by decreasing violation."""
        if self.n_ind == 0:
            return np.zeros(0, dtype=np.int64)
        at_active = np.abs(x[self.ind_bin] - self.ind_act) <= int_tol
        candidates = at_active & ~self.pinned_active(lo, hi)
        if not candidates.any():
            return np.zeros(0, dtype=np.int64)
        lhs = self.ind_mat @ x
        gap = lhs - self.ind_rhs
        viol = np.where(self.ind_le, gap, np.where(self.ind_ge, -gap, np.abs(gap)))
        mask = candidates & (viol > feas_tol)
        idx = np.flatnonzero(mask)
        return idx[np.argsort(-viol[idx], kind="stable")]


def _objective_cost(model: MilpModel, mode: str, n: int):
    """Internal cost vector; the simplex always minimizes."""
    if model.objective is None or not model.objective.terms:
        raise ValidationError(f"mode {mode!r} requires an objective on the model")
    cost = np.zeros(n)
    for coef, var in model.objective.terms:
        cost[var] = coef
    sign = 1.0 if mode == MINIMIZE else -1.0
    return sign * cost, sign


def solve_lp(model: MilpModel, objective=None) -> LpOutcome:
    """Solve the LP relaxation: integrality dropped; an indicator's implied
    constraint participates only if its binary is already fixed at the active
    value by bounds."""
    relax = _Relaxation(model)
    obj = objective if objective is not None else model.objective
    cost, sign = None, 1.0
    if obj is not None and obj.terms:
        cost = np.zeros(relax.n)
        for coef, var in obj.terms:
            cost[var] = coef
        sign = 1.0 if obj.sense == MINIMIZE else -1.0
        cost = sign * cost
    a, slo, shi, rhs = relax.lp_inputs(relax.lo, relax.hi)
    res = simplex.solve(a, slo, shi, rhs, relax.lo, relax.hi, cost)
    if res.status != simplex.OPTIMAL:
        return LpOutcome(res.status, None, None, res.iterations)
    value = sign * res.objective if cost is not None else None
    return LpOutcome("optimal", value, res.x, res.iterations)


def solve_milp(
    model: MilpModel,
    mode: str = FEASIBILITY,
    *,
    node_limit: int = DEFAULT_NODE_LIMIT,
    time_limit: float | None = None,
    feas_tol: float = DEFAULT_FEAS_TOL,
    int_tol: float = DEFAULT_INT_TOL,
    gap: float = 1e-9,
) -> MilpOutcome:
    """Branch and bound. Feasibility mode returns the first integral,
    indicator-consistent witness; minimize/maximize prove an optimum within
    the absolute gap. Hitting a limit yields status 'inconclusive', never
    'unsat'."""
    if mode not in (FEASIBILITY, MINIMIZE, MAXIMIZE):
        raise ValidationError(f"unknown mode {mode!r}")
    t0 = time.perf_counter()
    stats = MilpStats()
    relax = _Relaxation(model)
    optimizing = mode != FEASIBILITY
    cost, sign = (None, 1.0)
    if optimizing:
        cost, sign = _objective_cost(model, mode, relax.n)

    def lp(lo, hi):
        a, slo, shi, rhs = relax.lp_inputs(lo, hi)
        res = simplex.solve(a, slo, shi, rhs, lo, hi, cost)
        stats.simplex_iterations += res.iterations
        return res

    def polish(lo, hi, x, bound):
        """Fix every integer variable at its rounded value and re-solve, so
        witnesses carry exactly integral coordinates."""
        plo, phi = lo.copy(), hi.copy()
        for j in relax.int_vars:
            r = float(np.round(x[j]))
            r = min(max(r, math.ceil(lo[j] - _PIN_EPS)), math.floor(hi[j] + _PIN_EPS))
            plo[j] = phi[j] = r
        if np.array_equal(plo, lo) and np.array_equal(phi, hi):
            return x, bound
        res = lp(plo, phi)
        if res.status != simplex.OPTIMAL:
            return None, None
        return res.x, res.objective

    def dive(lo, hi):
        """LP-guided rounding: repeatedly pin the integer variable closest to
        an integral value and re-solve, repairing later choices as it goes.
        Cheap (at most one LP per integer variable) and usually lands on a
        good incumbent."""
        dlo, dhi = lo.copy(), hi.copy()
        while True:
            res = lp(dlo, dhi)
            if res.status != simplex.OPTIMAL:
                return None, None
            x = res.x
            open_ints = [j for j in relax.int_vars if dhi[j] - dlo[j] > _PIN_EPS]
            frac = [j for j in open_ints if abs(x[j] - np.round(x[j])) > DEFAULT_INT_TOL]
            viol = relax.indicator_violations(x, dlo, dhi, DEFAULT_INT_TOL, DEFAULT_FEAS_TOL)
            if not frac and viol.size == 0:
                return polish(dlo, dhi, x, res.objective)
            if viol.size:
                j = int(relax.ind_bin[viol[0]])
                v = float(np.round(x[j]))
            else:
                j = min(frac, key=lambda jj: abs(x[jj] - np.round(x[jj])))
                v = float(np.round(x[j]))
            v = min(max(v, dlo[j]), dhi[j])
            dlo[j] = dhi[j] = v

    incumbent_x, incumbent_obj = None, None

    def out(status, witness=None, objective=None):
        stats.seconds = time.perf_counter() - t0
        return MilpOutcome(status, witness, objective, stats)

    # Node payload: (lo, hi) bound arrays. Feasibility explores a LIFO stack;
    # optimization pops the smallest parent bound from a heap.
    if optimizing:
        heap = []
        seq = 0
        heapq.heappush(heap, (-np.inf, 0, relax.lo.copy(), relax.hi.copy()))
    else:
        stack = [(relax.lo.copy(), relax.hi.copy())]
    at_root = True

    while (heap if optimizing else stack):
        if stats.nodes >= node_limit:
            return out(INCONCLUSIVE, incumbent_x, _signed(incumbent_obj, sign))
        if time_limit is not None and time.perf_counter() - t0 > time_limit:
            return out(INCONCLUSIVE, incumbent_x, _signed(incumbent_obj, sign))
        if optimizing:
            bound_key, _, lo, hi = heapq.heappop(heap)
            if incumbent_obj is not None and bound_key >= incumbent_obj - gap:
                continue
        else:
            lo, hi = stack.pop()
        stats.nodes += 1
        root_here, at_root = at_root, False

        res = lp(lo, hi)
        if res.status == simplex.INFEASIBLE:
            continue
        if res.status == simplex.UNBOUNDED:
            if root_here:
                return out(UNBOUNDED)
            raise SolverError("relaxation unbounded below a bounded root")
        x, bound = res.x, res.objective
        if optimizing and incumbent_obj is not None and bound >= incumbent_obj - gap:
            continue

        frac = [j for j in relax.int_vars if abs(x[j] - np.round(x[j])) > int_tol]
        viol = relax.indicator_violations(x, lo, hi, int_tol, feas_tol)

        if not frac and viol.size == 0:
            witness, wobj = polish(lo, hi, x, bound)
            if witness is not None:
                if not optimizing:
                    return out(SAT, witness)
                if incumbent_obj is None or wobj < incumbent_obj:
                    incumbent_x, incumbent_obj = witness, wobj
                continue
            # Rounded fixing turned out infeasible: split on the first integer
            # variable not yet pinned by bounds.
            j = next((int(j) for j in relax.int_vars if hi[j] - lo[j] > _PIN_EPS), None)
            if j is None:
                if not optimizing:
                    return out(SAT, x)
                if incumbent_obj is None or bound < incumbent_obj:
                    incumbent_x, incumbent_obj = x, bound
                continue
            v = float(np.round(x[j]))
            children = []
            if v - 1 >= lo[j] - _PIN_EPS:
                children.append((lo[j], v - 1))
            children.append((v, v))
            if v + 1 <= hi[j] + _PIN_EPS:
                children.append((v + 1, hi[j]))
        elif viol.size:
            j = int(relax.ind_bin[viol[0]])
            active = float(relax.ind_act[viol[0]])
            children = [(active, active), (1.0 - active, 1.0 - active)]
        else:
            j = max(frac, key=lambda jj: (abs(x[jj] - np.round(x[jj])), -jj))
            down = math.floor(x[j] + int_tol)
            children = [(lo[j], float(down)), (float(down + 1), hi[j])]
            if x[j] - down >= 0.5:
                children.reverse()  # explore the nearer child first under DFS

        if optimizing and (root_here or stats.nodes % 256 == 0):
            witness, wobj = dive(lo, hi)  # fresh incumbent for pruning
            if witness is not None and (incumbent_obj is None or wobj < incumbent_obj):
                incumbent_x, incumbent_obj = witness, wobj

        for clo, chi in reversed(children):
            if clo > chi:
                continue
            nlo, nhi = lo.copy(), hi.copy()
            nlo[j], nhi[j] = max(lo[j], clo), min(hi[j], chi)
            if nlo[j] > nhi[j]:
                continue
            if optimizing:
                seq += 1
                heapq.heappush(heap, (bound, seq, nlo, nhi))
            else:
                stack.append((nlo, nhi))

    if optimizing and incumbent_x is not None:
        return out(SAT, incumbent_x, _signed(incumbent_obj, sign))
    return out(UNSAT)


def _signed(value, sign):
    return None if value is None else sign * value


def check_feasible(model: MilpModel, **limits) -> MilpOutcome:
    """Entailment workhorse: SAT with a witness, or UNSAT only once the search
    tree is fully fathomed. Limit overruns propagate as 'inconclusive'."""
    return solve_milp(model, FEASIBILITY, **limits)
