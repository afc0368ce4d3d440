"""Solver-neutral MILP container: variables, linear and indicator constraints,
bound mutation for assumption toggling, and LP-format export."""

from __future__ import annotations

import copy
import math
import re
from dataclasses import dataclass, field

from .errors import ValidationError

CONTINUOUS = "continuous"
INTEGER = "integer"
BINARY = "binary"

VAR_KINDS = (CONTINUOUS, INTEGER, BINARY)
RELATIONS = ("<=", ">=", "=")

LESS_EQUAL = "<="
GREATER_EQUAL = ">="
EQUAL = "="

MINIMIZE = "minimize"
MAXIMIZE = "maximize"


@dataclass
class Variable:
    index: int
    kind: str
    lower: float
    upper: float
    name: str


@dataclass(frozen=True)
class LinearConstraint:
    """Sum of coefficient*variable terms compared against a constant."""

    terms: tuple[tuple[float, int], ...]
    relation: str
    rhs: float

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValidationError(f"unknown relation {self.relation!r}")
        seen = set()
        for coef, var in self.terms:
            if not math.isfinite(coef):
                raise ValidationError(f"non-finite coefficient on variable {var}")
            if var in seen:
                raise ValidationError(f"duplicate variable {var} in constraint terms")
            seen.add(var)
        if not math.isfinite(self.rhs):
            raise ValidationError("non-finite right-hand side")


@dataclass(frozen=True)
class IndicatorConstraint:
    """binary = active_value  ->  implied linear constraint."""

    binary: int
    active_value: int
    implied: LinearConstraint


@dataclass(frozen=True)
class Objective:
    sense: str
    terms: tuple[tuple[float, int], ...]


def linear(terms, relation, rhs) -> LinearConstraint:
    """Convenience builder accepting any iterable of (coefficient, variable id)."""
    return LinearConstraint(tuple((float(c), int(v)) for c, v in terms), relation, float(rhs))


class MilpModel:
    """Mutable container confined to one thread of control at a time.

    Variable and constraint ids are dense, insertion-ordered, and never reused.
    Linear and indicator constraints share a single id space.
    """

    def __init__(self):
        self.variables: list[Variable] = []
        self.constraints: list[LinearConstraint | IndicatorConstraint] = []
        self.objective: Objective | None = None

    # -- variables ---------------------------------------------------------

    def add_variable(self, kind: str, lower: float, upper: float, name: str = "") -> int:
        if kind not in VAR_KINDS:
            raise ValidationError(f"unknown variable kind {kind!r}")
        lower, upper = float(lower), float(upper)
        self._check_bounds(kind, lower, upper)
        index = len(self.variables)
        self.variables.append(Variable(index, kind, lower, upper, name or f"v{index}"))
        return index

    def set_bounds(self, var: int, lower: float, upper: float) -> tuple[float, float]:
        """Replace a variable's bounds; returns the previous (lower, upper) so the
        caller can push/pop assumptions without re-encoding."""
        v = self._var(var)
        lower, upper = float(lower), float(upper)
        self._check_bounds(v.kind, lower, upper)
        previous = (v.lower, v.upper)
        v.lower, v.upper = lower, upper
        return previous

    @staticmethod
    def _check_bounds(kind: str, lower: float, upper: float):
        if math.isnan(lower) or math.isnan(upper):
            raise ValidationError("NaN bound")
        if lower > upper:
            raise ValidationError(f"lower bound {lower} exceeds upper bound {upper}")
        if kind == BINARY and (lower < 0 or upper > 1):
            raise ValidationError("binary variable bounds must lie within [0, 1]")

    def _var(self, index: int) -> Variable:
        try:
            return self.variables[index]
        except IndexError:
            raise ValidationError(f"unknown variable id {index}") from None

    # -- constraints -------------------------------------------------------

    def add_constraint(self, constraint: LinearConstraint) -> int:
        for _, var in constraint.terms:
            self._var(var)
        cid = len(self.constraints)
        self.constraints.append(constraint)
        return cid

    def add_linear(self, terms, relation: str, rhs: float) -> int:
        return self.add_constraint(linear(terms, relation, rhs))

    def add_indicator(self, binary: int, active_value: int, implied: LinearConstraint) -> int:
        v = self._var(binary)
        if v.kind != BINARY:
            raise ValidationError(f"indicator variable {v.name} is not binary")
        if active_value not in (0, 1):
            raise ValidationError(f"indicator active value must be 0 or 1, got {active_value}")
        for _, var in implied.terms:
            self._var(var)
        cid = len(self.constraints)
        self.constraints.append(IndicatorConstraint(binary, active_value, implied))
        return cid

    # -- objective ---------------------------------------------------------

    def set_objective(self, sense: str, terms) -> None:
        if sense not in (MINIMIZE, MAXIMIZE):
            raise ValidationError(f"unknown objective sense {sense!r}")
        tupled = tuple((float(c), int(v)) for c, v in terms)
        for _, var in tupled:
            self._var(var)
        self.objective = Objective(sense, tupled)

    def clear_objective(self) -> None:
        self.objective = None

    # -- misc ----------------------------------------------------------------

    def clone(self) -> "MilpModel":
        return copy.deepcopy(self)

    def linear_constraints(self):
        return [c for c in self.constraints if isinstance(c, LinearConstraint)]

    def indicator_constraints(self):
        return [c for c in self.constraints if isinstance(c, IndicatorConstraint)]

    def export_lp(self) -> str:
        return export_lp(self)


# -- assignment evaluation ---------------------------------------------------


def constraint_violation(constraint: LinearConstraint, assignment) -> float:
    """Non-negative amount by which the assignment breaks the constraint."""
    lhs = sum(coef * assignment[var] for coef, var in constraint.terms)
    if constraint.relation == LESS_EQUAL:
        return max(0.0, lhs - constraint.rhs)
    if constraint.relation == GREATER_EQUAL:
        return max(0.0, constraint.rhs - lhs)
    return abs(lhs - constraint.rhs)


def max_violation(model: MilpModel, assignment, active_tol: float = 1e-6) -> float:
    """Largest violation of any bound, linear row, integrality requirement, or
    triggered indicator under the given assignment."""
    worst = 0.0
    for v in model.variables:
        x = assignment[v.index]
        worst = max(worst, v.lower - x, x - v.upper)
        if v.kind in (INTEGER, BINARY):
            worst = max(worst, abs(x - round(x)))
    for c in model.constraints:
        if isinstance(c, LinearConstraint):
            worst = max(worst, constraint_violation(c, assignment))
        else:
            if abs(assignment[c.binary] - c.active_value) <= active_tol:
                worst = max(worst, constraint_violation(c.implied, assignment))
    return worst


def satisfies(model: MilpModel, assignment, tol: float = 1e-6) -> bool:
    return max_violation(model, assignment) <= tol


# -- LP-format export ---------------------------------------------------------

_NAME_OK = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")


def _fmt(x: float) -> str:
    """17 significant digits: round-trips any 64-bit float."""
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return "%.17g" % x


def _term_str(terms, names) -> str:
    if not terms:
        return "0"
    parts = []
    for k, (coef, var) in enumerate(terms):
        mag = _fmt(abs(coef))
        piece = f"{mag} {names[var]}"
        if k == 0:
            parts.append(piece if coef >= 0 else f"- {piece}")
        else:
            parts.append(f"{'+' if coef >= 0 else '-'} {piece}")
    return " ".join(parts)


def _export_names(model: MilpModel) -> list[str]:
    names, used = [], set()
    for v in model.variables:
        name = v.name if _NAME_OK.match(v.name) else f"v{v.index}"
        if name in used:
            name = f"{name}_{v.index}"
        used.add(name)
        names.append(name)
    return names


def export_lp(model: MilpModel) -> str:
    """Deterministic CPLEX-style LP text, with indicator rows rendered as
    `name: z = 1 -> expr <= rhs`."""
    names = _export_names(model)
    out = []
    sense = model.objective.sense if model.objective else MINIMIZE
    out.append("Maximize" if sense == MAXIMIZE else "Minimize")
    if model.objective and model.objective.terms:
        out.append(f" obj: {_term_str(model.objective.terms, names)}")
    else:
        out.append(" obj:")
    out.append("Subject To")
    for cid, c in enumerate(model.constraints):
        if isinstance(c, LinearConstraint):
            out.append(f" c{cid}: {_term_str(c.terms, names)} {c.relation} {_fmt(c.rhs)}")
        else:
            imp = c.implied
            out.append(
                f" c{cid}: {names[c.binary]} = {c.active_value} -> "
                f"{_term_str(imp.terms, names)} {imp.relation} {_fmt(imp.rhs)}"
            )
    out.append("Bounds")
    for v in model.variables:
        lo, hi = v.lower, v.upper
        if lo == -math.inf and hi == math.inf:
            out.append(f" {names[v.index]} free")
        elif lo == hi:
            out.append(f" {names[v.index]} = {_fmt(lo)}")
        else:
            left = "-infinity" if lo == -math.inf else _fmt(lo)
            right = "+infinity" if hi == math.inf else _fmt(hi)
            out.append(f" {left} <= {names[v.index]} <= {right}")
    out.append("Binary")
    for v in model.variables:
        if v.kind == BINARY:
            out.append(f" {names[v.index]}")
    out.append("General")
    for v in model.variables:
        if v.kind == INTEGER:
            out.append(f" {names[v.index]}")
    out.append("End")
    return "\n".join(out) + "\n"
