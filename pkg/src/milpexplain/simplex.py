"""Dense bounded-variable primal simplex.

Two-phase method: artificial variables absorb initial row infeasibility, then
the real objective is minimized. Nonbasic variables rest at a finite bound
(free variables rest at zero). Dantzig pricing with a permanent switch to
Bland's rule after a stall, which guarantees termination on degenerate models.

Rows are equalities against explicit slack columns; the caller expresses each
relation through the slack's bounds: [0, inf) for <=, (-inf, 0] for >=, and
[0, 0] for =.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverError
from .milp import EQUAL, GREATER_EQUAL, LESS_EQUAL

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_AT_LOWER, _AT_UPPER, _FREE, _BASIC = 0, 1, 2, 3

_STALL_LIMIT = 100
_RATE_TOL = 1e-10


@dataclass
class SimplexResult:
    status: str
    x: np.ndarray | None
    objective: float | None
    iterations: int


def slack_bounds(rel: list[str]) -> tuple[np.ndarray, np.ndarray]:
    lo = np.empty(len(rel))
    hi = np.empty(len(rel))
    for i, r in enumerate(rel):
        if r == LESS_EQUAL:
            lo[i], hi[i] = 0.0, np.inf
        elif r == GREATER_EQUAL:
            lo[i], hi[i] = -np.inf, 0.0
        elif r == EQUAL:
            lo[i], hi[i] = 0.0, 0.0
        else:
            raise ValueError(f"unknown relation {r!r}")
    return lo, hi


def solve(
    a: np.ndarray,
    slack_lo: np.ndarray,
    slack_hi: np.ndarray,
    rhs: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    cost: np.ndarray | None = None,
    *,
    opt_tol: float = 1e-9,
    feas_tol: float = 1e-7,
    pivot_tol: float = 1e-10,
    max_iter: int | None = None,
) -> SimplexResult:
    """Minimize cost @ x subject to a @ x + s = rhs with the given variable
    and slack bounds. cost=None runs a pure feasibility solve (phase 1 only).
    Deterministic: identical inputs take identical pivot paths."""
    m, n = a.shape

    lo = np.concatenate([lower, slack_lo])
    hi = np.concatenate([upper, slack_hi])

    status = np.where(lo > -np.inf, _AT_LOWER, np.where(hi < np.inf, _AT_UPPER, _FREE)).astype(np.int8)
    xval = np.where(status == _AT_LOWER, np.where(np.isfinite(lo), lo, 0.0), 0.0)
    up_mask = status == _AT_UPPER
    xval[up_mask] = hi[up_mask]

    # Candidate slack values with structurals at their resting points.
    resid = rhs - a @ xval[:n] if m else np.zeros(0)

    basis = np.empty(m, dtype=np.int64)
    art_cols, art_cost, art_vals = [], [], []
    for i in range(m):
        s = n + i
        if lo[s] - feas_tol <= resid[i] <= hi[s] + feas_tol:
            basis[i] = s
            status[s] = _BASIC
            xval[s] = resid[i]
        else:
            clamp = min(max(resid[i], lo[s]), hi[s])
            status[s] = _AT_LOWER if clamp == lo[s] else _AT_UPPER
            xval[s] = clamp
            t = resid[i] - clamp
            col = np.zeros(m)
            col[i] = 1.0
            art_cols.append(col)
            art_cost.append(1.0 if t >= 0 else -1.0)
            art_vals.append(t)
            basis[i] = -len(art_cols)  # placeholder, fixed below

    n_art = len(art_cols)
    a_ext = np.hstack([a, np.eye(m)] + ([np.column_stack(art_cols)] if n_art else []))
    if n_art:
        lo = np.concatenate([lo, [0.0 if c > 0 else -np.inf for c in art_cost]])
        hi = np.concatenate([hi, [np.inf if c > 0 else 0.0 for c in art_cost]])
        status = np.concatenate([status, np.full(n_art, _BASIC, dtype=np.int8)])
        xval = np.concatenate([xval, art_vals])
        k = 0
        for i in range(m):
            if basis[i] < 0:
                basis[i] = n + m + k
                k += 1

    ntot = n + m + n_art
    tab = a_ext.copy()  # B starts as the identity, so tab == B^{-1} a_ext
    if max_iter is None:
        max_iter = 20000 + 50 * ntot

    iters = 0

    def run_phase(c_ext: np.ndarray) -> str:
        nonlocal iters
        bland = False
        stall = 0
        while True:
            if iters >= max_iter:
                raise SolverError("simplex iteration limit reached")
            iters += 1
            d = c_ext - c_ext[basis] @ tab
            eligible = (
                ((status == _AT_LOWER) & (d < -opt_tol))
                | ((status == _AT_UPPER) & (d > opt_tol))
                | ((status == _FREE) & (np.abs(d) > opt_tol))
            ) & (hi > lo)

            banned = np.zeros(ntot, dtype=bool)
            while True:
                open_cols = eligible & ~banned
                if not open_cols.any():
                    if banned.any():
                        raise SolverError("no acceptable pivot column (numerical breakdown)")
                    return OPTIMAL
                if bland:
                    j = int(np.argmax(open_cols))
                else:
                    score = np.where(open_cols, np.abs(d), -np.inf)
                    j = int(np.argmax(score))

                dirn = 1.0
                if status[j] == _AT_UPPER or (status[j] == _FREE and d[j] > 0):
                    dirn = -1.0

                t_own = hi[j] - lo[j] if status[j] != _FREE else np.inf
                if m:
                    w = tab[:, j]
                    rate = -dirn * w
                    xb, lob, hib = xval[basis], lo[basis], hi[basis]
                    with np.errstate(divide="ignore", invalid="ignore"):
                        t_up = np.where(rate > _RATE_TOL, (hib - xb) / rate, np.inf)
                        t_dn = np.where(rate < -_RATE_TOL, (lob - xb) / rate, np.inf)
                    t_rows = np.maximum(np.minimum(t_up, t_dn), 0.0)
                    t_block = float(t_rows.min())
                else:
                    t_block = np.inf

                if t_own <= t_block:
                    if np.isinf(t_own):
                        return UNBOUNDED
                    # Bound flip: no basis change.
                    if m:
                        xval[basis] -= dirn * t_own * tab[:, j]
                    xval[j] = hi[j] if dirn > 0 else lo[j]
                    status[j] = _AT_UPPER if dirn > 0 else _AT_LOWER
                    stall = stall + 1 if t_own < 1e-12 else 0
                    break

                # Choose the leaving row among ties: largest pivot, then lowest
                # variable index (Bland mode: lowest variable index only).
                cand = np.flatnonzero(t_rows <= t_block + 1e-12)
                if bland:
                    r = int(cand[np.argmin(basis[cand])])
                else:
                    r = int(cand[np.argmax(np.abs(tab[cand, j]))])
                piv = tab[r, j]
                if abs(piv) < pivot_tol:
                    banned[j] = True
                    continue

                t = t_block
                leave = basis[r]
                xval[basis] -= dirn * t * tab[:, j]
                xval[j] = xval[j] + dirn * t
                if rate[r] > 0:
                    xval[leave], status[leave] = hi[leave], _AT_UPPER
                else:
                    xval[leave], status[leave] = lo[leave], _AT_LOWER
                status[j] = _BASIC
                basis[r] = j

                row = tab[r] / piv
                colv = tab[:, j].copy()
                colv[r] = 0.0
                tab[r] = row
                tab[:, :] -= np.outer(colv, row)

                stall = stall + 1 if t < 1e-12 else 0
                break

            if stall >= _STALL_LIMIT:
                bland = True

    # Phase 1: drive artificial variables to zero.
    if n_art:
        c1 = np.zeros(ntot)
        c1[n + m :] = art_cost
        out = run_phase(c1)
        if out == UNBOUNDED:
            raise SolverError("phase-1 objective unbounded (numerical breakdown)")
        infeas = float(c1 @ xval)
        if infeas > feas_tol:
            return SimplexResult(INFEASIBLE, None, None, iters)
        lo[n + m :] = 0.0
        hi[n + m :] = 0.0
        nonbasic_art = (status[n + m :] != _BASIC).nonzero()[0] + n + m
        xval[nonbasic_art] = 0.0
        status[nonbasic_art] = _AT_LOWER

    if cost is not None:
        c2 = np.zeros(ntot)
        c2[:n] = cost
        out = run_phase(c2)
        if out == UNBOUNDED:
            return SimplexResult(UNBOUNDED, None, None, iters)

    _refine(a_ext, rhs, basis, status, xval, lo, hi, m)
    worst = _violation(a_ext, rhs, xval, lo, hi)
    if worst > 1e-6:
        raise SolverError(f"solution violates constraints by {worst:.3e} (numerical breakdown)")
    obj = float(cost @ xval[:n]) if cost is not None else 0.0
    return SimplexResult(OPTIMAL, xval[:n].copy(), obj, iters)


def _violation(a_ext, rhs, xval, lo, hi) -> float:
    worst = max(float(np.max(lo - xval, initial=0.0)), float(np.max(xval - hi, initial=0.0)))
    if rhs.size:
        worst = max(worst, float(np.max(np.abs(a_ext @ xval - rhs))))
    return worst


def _refine(a_ext, rhs, basis, status, xval, lo, hi, m):
    """Re-solve the basic system exactly to shed accumulated pivot drift."""
    if m == 0:
        return
    nonbasic = np.flatnonzero(status != _BASIC)
    try:
        b_mat = a_ext[:, basis]
        adj = rhs - a_ext[:, nonbasic] @ xval[nonbasic]
        refined = np.linalg.solve(b_mat, adj)
    except np.linalg.LinAlgError:
        return
    candidate = xval.copy()
    candidate[basis] = refined
    if _violation(a_ext, rhs, candidate, lo, hi) <= _violation(a_ext, rhs, xval, lo, hi):
        xval[basis] = refined
