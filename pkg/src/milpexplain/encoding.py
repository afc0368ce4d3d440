"""Network-to-MILP encodings.

Two alternative constructions of the constraint set F for a ReLU classifier:

* indicator: per hidden neuron, an equality `sum(w x) + b = x - s` plus the
  implications `z=1 -> x <= 0` and `z=0 -> s <= 0`, with computed upper bounds
  on x and s;
* bigm: per hidden neuron, a three-row sandwich slackened by the neuron's
  pre-activation bounds, with no slack variables.

Bound constants come from per-neuron optimization (tighten_bounds) and are
widened by a small pad before use so solver tolerance can never exclude a
true activation.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import milp, solver
from .errors import InconclusiveError, SolverError, ValidationError
from .milp import BINARY, CONTINUOUS, EQUAL, GREATER_EQUAL, INTEGER, LESS_EQUAL, MilpModel, linear
from .model import Ann, Instance, forward, preactivations

INDICATOR = "indicator"
BIG_M = "bigm"
KINDS = (INDICATOR, BIG_M)

BOUND_PAD = 1e-6

# Per-neuron emission modes for the big-M construction. Neurons whose
# pre-activation range proves them stable collapse to a fixed branch: that
# avoids zero-width big-M coefficients at the price of deviating from the
# nominal four-row count.
SPLIT = "split"
ALWAYS_ON = "on"
ALWAYS_OFF = "off"


@dataclass(frozen=True)
class NeuronBounds:
    pre_lb: float
    pre_ub: float

    def __post_init__(self):
        if self.pre_lb > self.pre_ub:
            raise ValidationError(f"pre-activation bounds inverted: {self.pre_lb} > {self.pre_ub}")

    @property
    def relu_ub(self) -> float:
        return max(0.0, self.pre_ub)

    @property
    def slack_ub(self) -> float:
        return max(0.0, -self.pre_lb)


@dataclass(frozen=True)
class OutputBounds:
    lb: float
    ub: float

    def __post_init__(self):
        if self.lb > self.ub:
            raise ValidationError(f"output bounds inverted: {self.lb} > {self.ub}")


@dataclass
class NetworkBounds:
    hidden: list[list[NeuronBounds]]
    outputs: list[OutputBounds]
    tighten_seconds: float = 0.0


@dataclass
class CountStats:
    reals: int
    binaries: int
    constraints: int


@dataclass
class EncodedNetwork:
    kind: str
    ann: Ann
    model: MilpModel
    input_ids: list[int]
    hidden_ids: list[list[int]]
    slack_ids: list[list[int]]  # empty lists for the big-M kind
    gate_ids: list[list[int]]
    output_ids: list[int]
    modes: list[list[str]]
    bounds: NetworkBounds
    build_seconds: float
    negated_class: int | None = None
    negation_ids: list[int] = field(default_factory=list)

    @property
    def total_build_seconds(self) -> float:
        """Construction plus bound tightening, matching how build time is
        reported by the benchmark."""
        return self.build_seconds + self.bounds.tighten_seconds


# -- shared emission helpers ---------------------------------------------------


def _input_kind(feature_kind: str) -> str:
    # Integer and binary features become integer MILP variables so a freed
    # feature still ranges over its discrete domain.
    return CONTINUOUS if feature_kind == "continuous" else INTEGER


def _add_inputs(m: MilpModel, ann: Ann) -> list[int]:
    return [
        m.add_variable(_input_kind(f.kind), f.lower, f.upper, f.name) for f in ann.features
    ]


def _affine_terms(weights_row, prev_ids):
    return [(float(w), v) for w, v in zip(weights_row, prev_ids) if w != 0.0]


def _emit_hidden_indicator(m, weights, bias, prev_ids, nb_row, layer_no):
    x_ids, s_ids, z_ids = [], [], []
    for i, nb in enumerate(nb_row):
        x = m.add_variable(CONTINUOUS, 0.0, nb.relu_ub + BOUND_PAD, f"x{layer_no}_{i + 1}")
        s = m.add_variable(CONTINUOUS, 0.0, nb.slack_ub + BOUND_PAD, f"s{layer_no}_{i + 1}")
        z = m.add_variable(BINARY, 0.0, 1.0, f"z{layer_no}_{i + 1}")
        terms = _affine_terms(weights[i], prev_ids) + [(-1.0, x), (1.0, s)]
        m.add_linear(terms, EQUAL, -float(bias[i]))
        m.add_indicator(z, 1, linear([(1.0, x)], LESS_EQUAL, 0.0))
        m.add_indicator(z, 0, linear([(1.0, s)], LESS_EQUAL, 0.0))
        x_ids.append(x)
        s_ids.append(s)
        z_ids.append(z)
    return x_ids, s_ids, z_ids, [SPLIT] * len(nb_row)


def _emit_hidden_bigm(m, weights, bias, prev_ids, nb_row, layer_no):
    x_ids, z_ids, modes = [], [], []
    for i, nb in enumerate(nb_row):
        b = float(bias[i])
        x = m.add_variable(CONTINUOUS, 0.0, nb.relu_ub + BOUND_PAD, f"x{layer_no}_{i + 1}")
        affine = _affine_terms(weights[i], prev_ids)
        if nb.pre_lb >= 0.0:
            z = m.add_variable(BINARY, 1.0, 1.0, f"z{layer_no}_{i + 1}")
            m.add_linear(affine + [(-1.0, x)], EQUAL, -b)
            mode = ALWAYS_ON
        elif nb.pre_ub <= 0.0:
            z = m.add_variable(BINARY, 0.0, 0.0, f"z{layer_no}_{i + 1}")
            m.set_bounds(x, 0.0, 0.0)
            mode = ALWAYS_OFF
        else:
            z = m.add_variable(BINARY, 0.0, 1.0, f"z{layer_no}_{i + 1}")
            lbp = nb.pre_lb - BOUND_PAD
            ubp = nb.pre_ub + BOUND_PAD
            neg_affine = [(-c, v) for c, v in affine]
            # x <= affine + b - lbp (1 - z)
            m.add_linear([(1.0, x)] + neg_affine + [(-lbp, z)], LESS_EQUAL, b - lbp)
            # x >= affine + b
            m.add_linear([(1.0, x)] + neg_affine, GREATER_EQUAL, b)
            # x <= ubp z
            m.add_linear([(1.0, x), (-ubp, z)], LESS_EQUAL, 0.0)
            mode = SPLIT
        x_ids.append(x)
        z_ids.append(z)
        modes.append(mode)
    return x_ids, [], z_ids, modes


def _emit_outputs(m, weights, bias, prev_ids):
    out_ids = []
    for i in range(weights.shape[0]):
        o = m.add_variable(CONTINUOUS, -np.inf, np.inf, f"o{i + 1}")
        m.add_linear(_affine_terms(weights[i], prev_ids) + [(-1.0, o)], EQUAL, -float(bias[i]))
        out_ids.append(o)
    return out_ids


def _emit_hidden(kind, m, weights, bias, prev_ids, nb_row, layer_no):
    emit = _emit_hidden_indicator if kind == INDICATOR else _emit_hidden_bigm
    return emit(m, weights, bias, prev_ids, nb_row, layer_no)


# -- bound tightening ----------------------------------------------------------


def tighten_bounds(ann: Ann, kind: str, **limits) -> NetworkBounds:
    """Per-neuron pre-activation extrema by optimization, layer by layer: each
    hidden neuron is minimized and maximized subject to the constraints of all
    previously encoded layers, then the layer itself is encoded with its fresh
    bounds. Output extrema close the pass. Wall time is recorded because it
    counts toward build time."""
    if kind not in KINDS:
        raise ValidationError(f"unknown encoding kind {kind!r}")
    t0 = time.perf_counter()
    m = MilpModel()
    prev_ids = _add_inputs(m, ann)
    hidden: list[list[NeuronBounds]] = []
    for layer_no, layer in enumerate(ann.layers[:-1], start=1):
        nb_row = [
            NeuronBounds(*_extrema(m, layer.weights[i], layer.bias[i], prev_ids, **limits))
            for i in range(layer.weights.shape[0])
        ]
        hidden.append(nb_row)
        prev_ids, _, _, _ = _emit_hidden(kind, m, layer.weights, layer.bias, prev_ids, nb_row, layer_no)
    last = ann.layers[-1]
    outputs = [
        OutputBounds(*_extrema(m, last.weights[i], last.bias[i], prev_ids, **limits))
        for i in range(last.weights.shape[0])
    ]
    return NetworkBounds(hidden, outputs, time.perf_counter() - t0)


def _extrema(m: MilpModel, weights_row, bias, prev_ids, **limits) -> tuple[float, float]:
    terms = _affine_terms(weights_row, prev_ids)
    b = float(bias)
    if not terms:
        return b, b
    m.set_objective(milp.MINIMIZE, terms)
    lo = _optimize(m, milp.MINIMIZE, **limits)
    hi = _optimize(m, milp.MAXIMIZE, **limits)
    m.clear_objective()
    return lo + b, hi + b


def _optimize(m: MilpModel, mode: str, **limits) -> float:
    # The fathoming gap stays an order of magnitude under the bound pad, so
    # a bound reported `gap` short of the true optimum is still covered.
    limits.setdefault("gap", BOUND_PAD / 10)
    out = solver.solve_milp(m, mode, **limits)
    if out.status == solver.INCONCLUSIVE:
        raise InconclusiveError(
            "bound tightening hit a search limit", out.stats.nodes, out.stats.seconds
        )
    if out.status != solver.SAT:
        raise SolverError(f"bound tightening solve ended {out.status}")
    return float(out.objective)


# -- encoding entry points ------------------------------------------------------


def _encode(ann: Ann, bounds: NetworkBounds, kind: str) -> EncodedNetwork:
    if len(bounds.hidden) != len(ann.layers) - 1 or any(
        len(row) != layer.weights.shape[0] for row, layer in zip(bounds.hidden, ann.layers)
    ):
        raise ValidationError("bounds shape does not match the network architecture")
    if len(bounds.outputs) != ann.n_outputs:
        raise ValidationError("output bounds length does not match the class count")
    t0 = time.perf_counter()
    m = MilpModel()
    input_ids = _add_inputs(m, ann)
    prev_ids = input_ids
    hidden_ids, slack_ids, gate_ids, modes = [], [], [], []
    for layer_no, (layer, nb_row) in enumerate(zip(ann.layers[:-1], bounds.hidden), start=1):
        x_ids, s_ids, z_ids, layer_modes = _emit_hidden(
            kind, m, layer.weights, layer.bias, prev_ids, nb_row, layer_no
        )
        hidden_ids.append(x_ids)
        slack_ids.append(s_ids)
        gate_ids.append(z_ids)
        modes.append(layer_modes)
        prev_ids = x_ids
    last = ann.layers[-1]
    output_ids = _emit_outputs(m, last.weights, last.bias, prev_ids)
    return EncodedNetwork(
        kind=kind,
        ann=ann,
        model=m,
        input_ids=input_ids,
        hidden_ids=hidden_ids,
        slack_ids=slack_ids,
        gate_ids=gate_ids,
        output_ids=output_ids,
        modes=modes,
        bounds=bounds,
        build_seconds=time.perf_counter() - t0,
    )


def encode_indicator(ann: Ann, bounds: NetworkBounds) -> EncodedNetwork:
    return _encode(ann, bounds, INDICATOR)


def encode_bigm(ann: Ann, bounds: NetworkBounds) -> EncodedNetwork:
    return _encode(ann, bounds, BIG_M)


def build_encoding(ann: Ann, kind: str, bounds: NetworkBounds | None = None, **limits) -> EncodedNetwork:
    """Tighten (unless bounds are supplied) and encode in one step."""
    if bounds is None:
        bounds = tighten_bounds(ann, kind, **limits)
    return _encode(ann, bounds, kind)


# -- negated prediction ----------------------------------------------------------


def _check_attachable(enc: EncodedNetwork, class_i: int, kind: str):
    if enc.kind != kind:
        raise ValidationError(f"expected a {kind} encoding, got {enc.kind}")
    if enc.negated_class is not None:
        raise ValidationError("negated prediction already attached")
    if not 0 <= class_i < len(enc.output_ids):
        raise ValidationError(f"class index {class_i} out of range")
    if len(enc.output_ids) < 2:
        raise ValidationError("negated prediction needs at least two classes")


def attach_negation_indicator(enc: EncodedNetwork, class_i: int) -> None:
    """q_j = 1 -> o_i <= o_j for each rival j, plus sum(q) >= 1."""
    _check_attachable(enc, class_i, INDICATOR)
    m = enc.model
    o = enc.output_ids
    q_ids = []
    for j in range(len(o)):
        if j == class_i:
            continue
        q = m.add_variable(BINARY, 0.0, 1.0, f"q{j + 1}")
        m.add_indicator(q, 1, linear([(1.0, o[class_i]), (-1.0, o[j])], LESS_EQUAL, 0.0))
        q_ids.append(q)
    m.add_linear([(1.0, q) for q in q_ids], GREATER_EQUAL, 1.0)
    enc.negated_class = class_i
    enc.negation_ids = q_ids


def attach_negation_bigm(enc: EncodedNetwork, class_i: int) -> None:
    """o_i - o_j <= (ub_i - lb_j)(1 - q_j) for each rival j, plus sum(q) >= 1.
    The output bounds make the row vacuous while q_j = 0."""
    _check_attachable(enc, class_i, BIG_M)
    m = enc.model
    o = enc.output_ids
    ub_i = enc.bounds.outputs[class_i].ub + BOUND_PAD
    q_ids = []
    for j in range(len(o)):
        if j == class_i:
            continue
        lb_j = enc.bounds.outputs[j].lb - BOUND_PAD
        big = ub_i - lb_j
        q = m.add_variable(BINARY, 0.0, 1.0, f"q{j + 1}")
        m.add_linear(
            [(1.0, o[class_i]), (-1.0, o[j]), (big, q)], LESS_EQUAL, big
        )
        q_ids.append(q)
    m.add_linear([(1.0, q) for q in q_ids], GREATER_EQUAL, 1.0)
    enc.negated_class = class_i
    enc.negation_ids = q_ids


def attach_negation(enc: EncodedNetwork, class_i: int) -> None:
    if enc.kind == INDICATOR:
        attach_negation_indicator(enc, class_i)
    else:
        attach_negation_bigm(enc, class_i)


# -- counting ---------------------------------------------------------------------


def count_stats(enc: EncodedNetwork) -> CountStats:
    """Exact variable and constraint counts of the full formula.

    Convention: the bound interval on each input, hidden, and slack variable
    counts as one constraint (those intervals are rows of the construction);
    indicator constraints count as constraints; binary declarations and the
    output variables' (absent) bounds do not count.
    """
    if enc.negated_class is None:
        raise ValidationError("counts are defined once the negated prediction is attached")
    n_hidden_x = sum(len(ids) for ids in enc.hidden_ids)
    n_slack = sum(len(ids) for ids in enc.slack_ids)
    reals = len(enc.input_ids) + n_hidden_x + n_slack + len(enc.output_ids)
    binaries = sum(len(ids) for ids in enc.gate_ids) + len(enc.negation_ids)
    constraints = len(enc.model.constraints) + len(enc.input_ids) + n_hidden_x + n_slack
    return CountStats(reals, binaries, constraints)


# -- canonical assignments ---------------------------------------------------------


def canonical_assignment(enc: EncodedNetwork, point: Instance) -> np.ndarray:
    """Extend a forward pass to a full variable assignment of the encoding:
    x = max(0, pre), s = max(0, -pre), gates set per branch, and (when the
    negated prediction is attached) q_j = 1 exactly where o_i <= o_j."""
    asn = np.zeros(len(enc.model.variables))
    asn[enc.input_ids] = point.values
    pre_layers = preactivations(enc.ann, point)
    for layer_no, pre in enumerate(pre_layers):
        for i, p in enumerate(pre):
            x_id = enc.hidden_ids[layer_no][i]
            asn[x_id] = max(0.0, p)
            if enc.slack_ids[layer_no]:
                asn[enc.slack_ids[layer_no][i]] = max(0.0, -p)
            z_id = enc.gate_ids[layer_no][i]
            mode = enc.modes[layer_no][i]
            if enc.kind == INDICATOR:
                asn[z_id] = 1.0 if p <= 0 else 0.0
            elif mode == ALWAYS_ON:
                asn[z_id] = 1.0
            elif mode == ALWAYS_OFF:
                asn[z_id] = 0.0
            else:
                asn[z_id] = 0.0 if p <= 0 else 1.0
    _, logits = forward(enc.ann, point)
    asn[enc.output_ids] = logits
    if enc.negated_class is not None:
        i = enc.negated_class
        rivals = [j for j in range(len(enc.output_ids)) if j != i]
        for q_id, j in zip(enc.negation_ids, rivals):
            asn[q_id] = 1.0 if logits[i] <= logits[j] else 0.0
    return asn


# -- bounds cache file ----------------------------------------------------------------


def bounds_to_doc(bounds: NetworkBounds, model_name: str, model_sha: str, kind: str) -> dict:
    return {
        "model_name": model_name,
        "model_sha256": model_sha,
        "encoding": kind,
        "hidden": [
            [{"pre_lb": nb.pre_lb, "pre_ub": nb.pre_ub} for nb in row] for row in bounds.hidden
        ],
        "outputs": [{"lb": ob.lb, "ub": ob.ub} for ob in bounds.outputs],
        "tighten_seconds": bounds.tighten_seconds,
    }


def bounds_from_doc(doc: dict) -> NetworkBounds:
    try:
        hidden = [
            [NeuronBounds(float(nb["pre_lb"]), float(nb["pre_ub"])) for nb in row]
            for row in doc["hidden"]
        ]
        outputs = [OutputBounds(float(ob["lb"]), float(ob["ub"])) for ob in doc["outputs"]]
        return NetworkBounds(hidden, outputs, float(doc.get("tighten_seconds", 0.0)))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed bounds cache: {exc}") from exc


def dump_bounds(bounds: NetworkBounds, model_name: str, model_sha: str, kind: str) -> str:
    return json.dumps(bounds_to_doc(bounds, model_name, model_sha, kind), indent=2) + "\n"


def load_bounds(text: str) -> tuple[NetworkBounds, dict]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"bounds cache is not valid JSON: {exc}") from exc
    return bounds_from_doc(doc), doc
