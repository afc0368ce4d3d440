"""Minimal explanations by one-pass deletion.

A prediction is certified by infeasibility: fixing a subset of features
entails the predicted class exactly when the encoding plus the negated
prediction admits no satisfying point. The deletion loop frees one feature at
a time and keeps it only if freeing breaks the entailment.

The brute-force oracle re-decides entailment by enumerating ReLU activation
patterns and solving each pattern's linear program with scipy's HiGHS backend,
an entirely separate code path from the embedded solver.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from . import solver
from .encoding import EncodedNetwork, attach_negation, build_encoding
from .errors import InconclusiveError, SolverError, TieMarginError, ValidationError
from .model import Ann, Instance, forward, make_instance, predict, prediction_margin

MARGIN_TOL = solver.DEFAULT_FEAS_TOL

_ORACLE_MAX_HIDDEN = 10
_ORACLE_MAX_COMBOS = 4096


@dataclass
class EntailmentVerdict:
    holds: bool
    counterexample: Instance | None = None
    seconds: float = 0.0


@dataclass
class CheckRecord:
    feature: int
    entailed: bool  # True: the feature was dropped
    seconds: float


@dataclass
class Explanation:
    kept: list[tuple[int, float]]
    dropped: list[int]
    predicted_class: int
    checks: list[CheckRecord]
    total_seconds: float
    encoding: str
    order: list[int]


@dataclass
class VerifyReport:
    ok: bool
    sufficiency_ok: bool
    minimality_failures: list[str] = field(default_factory=list)
    counterexample_failures: list[str] = field(default_factory=list)
    messages: list[str] = field(default_factory=list)


# -- entailment ----------------------------------------------------------------


def entails(
    enc: EncodedNetwork,
    instance: Instance,
    free: set[int],
    class_i: int,
    **limits,
) -> EntailmentVerdict:
    """Decide whether fixing every non-free feature at its instance value
    entails class_i. Runs one feasibility search on the encoded model; input
    bounds are restored to their pre-call state before returning."""
    if enc.negated_class != class_i:
        raise ValidationError(
            f"encoding negates class {enc.negated_class}, asked to certify {class_i}"
        )
    features = enc.ann.features
    if any(i < 0 or i >= len(features) for i in free):
        raise ValidationError("free set contains an out-of-range feature index")
    m = enc.model
    t0 = time.perf_counter()
    saved = [(vid, *m.set_bounds(vid, features[k].lower, features[k].upper))
             if k in free
             else (vid, *m.set_bounds(vid, instance.values[k], instance.values[k]))
             for k, vid in enumerate(enc.input_ids)]
    try:
        outcome = solver.check_feasible(m, **limits)
    finally:
        for vid, lo, hi in saved:
            m.set_bounds(vid, lo, hi)
    elapsed = time.perf_counter() - t0
    if outcome.status == solver.INCONCLUSIVE:
        raise InconclusiveError(
            "entailment check hit a search limit", outcome.stats.nodes, outcome.stats.seconds
        )
    if outcome.status == solver.UNSAT:
        return EntailmentVerdict(True, None, elapsed)
    coords = outcome.witness[enc.input_ids]
    return EntailmentVerdict(False, _witness_instance(features, coords), elapsed)


def _witness_instance(features, coords) -> Instance:
    values = []
    for f, v in zip(features, coords):
        if f.kind in ("integer", "binary"):
            v = float(round(v))
        values.append(min(max(float(v), f.lower), f.upper))
    return make_instance(features, values)


# -- Algorithm: one-pass deletion -------------------------------------------------


def minimal_explanation(
    enc: EncodedNetwork,
    instance: Instance,
    order: list[int] | None = None,
    **limits,
) -> Explanation:
    """Free features one at a time in the given order; a feature stays dropped
    exactly when the remaining fixings still entail the prediction. The result
    is subset-minimal for this deletion pass."""
    ann = enc.ann
    n = ann.n_inputs
    target = predict(ann, instance)
    if enc.negated_class != target:
        raise ValidationError(
            f"encoding was negated for class {enc.negated_class}, "
            f"but the instance predicts class {target}"
        )
    margin = prediction_margin(ann, instance)
    if margin < MARGIN_TOL:
        raise TieMarginError(
            f"prediction margin {margin:.3e} is below {MARGIN_TOL:.0e}; "
            "a strict argmax cannot be certified at solver tolerance"
        )
    if order is None:
        order = list(range(n))
    if sorted(order) != list(range(n)):
        raise ValidationError("order must be a permutation of the feature indices")
    t0 = time.perf_counter()
    dropped: set[int] = set()
    checks: list[CheckRecord] = []
    for idx in order:
        verdict = entails(enc, instance, dropped | {idx}, target, **limits)
        checks.append(CheckRecord(idx, verdict.holds, verdict.seconds))
        if verdict.holds:
            dropped.add(idx)
    kept = [(i, float(instance.values[i])) for i in range(n) if i not in dropped]
    return Explanation(
        kept=kept,
        dropped=sorted(dropped),
        predicted_class=target,
        checks=checks,
        total_seconds=time.perf_counter() - t0,
        encoding=enc.kind,
        order=list(order),
    )


# -- independent verification ------------------------------------------------------


def verify_explanation(
    ann: Ann,
    kind: str,
    instance: Instance,
    explanation: Explanation,
    **limits,
) -> VerifyReport:
    """Re-derive everything from scratch: (a) the kept fixings alone entail
    the prediction, (b) freeing any single kept feature breaks it, and (c)
    every reported counterexample genuinely flips or ties the prediction."""
    n = ann.n_inputs
    target = explanation.predicted_class
    report = VerifyReport(ok=True, sufficiency_ok=True)

    kept_idx = [i for i, _ in explanation.kept]
    if sorted(kept_idx + list(explanation.dropped)) != list(range(n)):
        report.ok = False
        report.messages.append("kept and dropped features do not partition the feature set")
        return report
    if predict(ann, instance) != target:
        report.ok = False
        report.messages.append("instance prediction does not match the explanation's class")
        return report
    for i, v in explanation.kept:
        if v != instance.values[i]:
            report.ok = False
            report.messages.append(f"kept value for {ann.features[i].name} differs from the instance")
            return report

    enc = build_encoding(ann, kind, **limits)
    attach_negation(enc, target)
    free_base = set(range(n)) - set(kept_idx)

    sufficiency = entails(enc, instance, free_base, target, **limits)
    if not sufficiency.holds:
        report.ok = False
        report.sufficiency_ok = False
        report.messages.append("kept features do not entail the prediction")

    for i, _ in explanation.kept:
        verdict = entails(enc, instance, free_base | {i}, target, **limits)
        name = ann.features[i].name
        if verdict.holds:
            report.ok = False
            report.minimality_failures.append(name)
            continue
        _, logits = forward(ann, verdict.counterexample)
        rivals = [logits[j] for j in range(len(logits)) if j != target]
        margin = float(logits[target] - max(rivals))
        if margin > MARGIN_TOL:
            report.ok = False
            report.counterexample_failures.append(name)
    return report


# -- brute-force oracle ---------------------------------------------------------------


def brute_force_entails(
    ann: Ann, instance: Instance, free: set[int], class_i: int
) -> EntailmentVerdict:
    """Exhaustive re-decision of `entails`, independent of the encodings and
    the embedded solver: every ReLU on/off pattern reduces the network to an
    affine map over a polytope, and each pattern/rival pair becomes one HiGHS
    feasibility LP over the free continuous features. Free integer features
    are enumerated outright."""
    hidden_total = sum(ann.hidden_sizes)
    if hidden_total > _ORACLE_MAX_HIDDEN:
        raise ValidationError(
            f"oracle limited to {_ORACLE_MAX_HIDDEN} hidden neurons, network has {hidden_total}"
        )
    features = ann.features
    if any(i < 0 or i >= len(features) for i in free):
        raise ValidationError("free set contains an out-of-range feature index")
    if not 0 <= class_i < ann.n_outputs:
        raise ValidationError(f"class index {class_i} out of range")

    free_sorted = sorted(free)
    int_free = [i for i in free_sorted if features[i].kind != "continuous"]
    cont_free = [i for i in free_sorted if features[i].kind == "continuous"]
    ranges = [range(int(features[i].lower), int(features[i].upper) + 1) for i in int_free]
    combos = math.prod(len(r) for r in ranges) if ranges else 1
    if combos > _ORACLE_MAX_COMBOS:
        raise ValidationError(f"{combos} integer combinations exceed the oracle guard")

    t0 = time.perf_counter()
    base = instance.values.astype(float).copy()
    for combo in itertools.product(*ranges) if ranges else [()]:
        for i, v in zip(int_free, combo):
            base[i] = float(v)
        hit = _patterns_feasible(ann, base, cont_free, class_i)
        if hit is not None:
            point = base.copy()
            point[cont_free] = hit
            counterexample = _witness_instance(features, point)
            return EntailmentVerdict(False, counterexample, time.perf_counter() - t0)
    return EntailmentVerdict(True, None, time.perf_counter() - t0)


def _patterns_feasible(ann: Ann, base: np.ndarray, cont_free: list[int], class_i: int):
    """First satisfying assignment of some (pattern, rival) LP, or None."""
    n_free = len(cont_free)
    coef0 = np.zeros((ann.n_inputs, n_free))
    for col, i in enumerate(cont_free):
        coef0[i, col] = 1.0
    const0 = base.copy()
    const0[cont_free] = 0.0
    bounds = [(ann.features[i].lower, ann.features[i].upper) for i in cont_free]
    sizes = ann.hidden_sizes

    for pattern in itertools.product((0, 1), repeat=sum(sizes)):
        rows, rhs = [], []
        coefs, consts = coef0, const0
        pos = 0
        for layer in ann.layers[:-1]:
            pre_c = layer.weights @ coefs
            pre_k = layer.weights @ consts + layer.bias
            width = layer.weights.shape[0]
            gates = pattern[pos : pos + width]
            pos += width
            for i, on in enumerate(gates):
                if on:
                    rows.append(-pre_c[i])  # pre >= 0
                    rhs.append(pre_k[i])
                else:
                    rows.append(pre_c[i])  # pre <= 0
                    rhs.append(-pre_k[i])
            mask = np.array(gates, dtype=float)
            coefs = pre_c * mask[:, None]
            consts = pre_k * mask
        last = ann.layers[-1]
        out_c = last.weights @ coefs
        out_k = last.weights @ consts + last.bias
        for j in range(ann.n_outputs):
            if j == class_i:
                continue
            a_ub = np.vstack(rows + [out_c[class_i] - out_c[j]])
            b_ub = np.array(rhs + [out_k[j] - out_k[class_i]])
            x = _lp_feasible(a_ub, b_ub, bounds, n_free)
            if x is not None:
                return x
    return None


def _lp_feasible(a_ub, b_ub, bounds, n_free):
    if n_free == 0:
        return np.zeros(0) if np.all(b_ub >= -1e-9) else None
    # Presolve off: these LPs are tiny, and presolve has misclassified
    # borderline systems in the wild; the oracle must not inherit that.
    res = linprog(
        np.zeros(n_free),
        A_ub=a_ub,
        b_ub=b_ub,
        bounds=bounds,
        method="highs",
        options={"presolve": False},
    )
    if res.status == 0:
        return res.x
    if res.status == 2:
        return None
    raise SolverError(f"oracle LP ended with status {res.status}: {res.message}")
