"""Feedforward ReLU classifiers, feature domains, instances, and dataset
preprocessing. Prediction semantics live here; every encoding must agree with
`forward`/`predict` exactly."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

FEATURE_KINDS = ("continuous", "integer", "binary")


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: str
    lower: float
    upper: float

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise ValidationError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValidationError(f"feature {self.name!r}: non-finite bound")
        if self.lower > self.upper:
            raise ValidationError(
                f"feature {self.name!r}: lower {self.lower} exceeds upper {self.upper}"
            )
        if self.kind == "binary" and (self.lower, self.upper) != (0.0, 1.0):
            raise ValidationError(f"feature {self.name!r}: binary features span [0, 1]")
        if self.kind == "integer" and (
            self.lower != int(self.lower) or self.upper != int(self.upper)
        ):
            raise ValidationError(f"feature {self.name!r}: integer bounds must be integral")


@dataclass(frozen=True, eq=False)
class Layer:
    weights: np.ndarray  # (n_l, n_{l-1})
    bias: np.ndarray  # (n_l,)

    def __post_init__(self):
        self.weights.setflags(write=False)
        self.bias.setflags(write=False)


@dataclass(frozen=True, eq=False)
class Ann:
    """Immutable after construction; safe to share across workers.

    Hidden layers apply ReLU, the last layer is linear (no Softmax: argmax
    over logits is the prediction, ties broken by lowest class index).
    """

    name: str
    features: list[FeatureSpec]
    layers: list[Layer]
    classes: list[str]

    def __post_init__(self):
        if not self.features:
            raise ValidationError("network needs at least one input feature")
        if not self.layers:
            raise ValidationError("network needs at least one layer")
        prev = len(self.features)
        for l, layer in enumerate(self.layers):
            w, b = layer.weights, layer.bias
            if w.ndim != 2 or b.ndim != 1:
                raise ValidationError(f"layers[{l}]: weights must be 2-D, bias 1-D")
            if w.shape[1] != prev:
                raise ValidationError(
                    f"layers[{l}].weights: expected {prev} columns, got {w.shape[1]}"
                )
            if b.shape[0] != w.shape[0]:
                raise ValidationError(
                    f"layers[{l}].bias: expected length {w.shape[0]}, got {b.shape[0]}"
                )
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValidationError(f"layers[{l}]: non-finite weight or bias")
            prev = w.shape[0]
        if len(self.classes) != prev:
            raise ValidationError(
                f"classes: expected {prev} names for the last layer, got {len(self.classes)}"
            )

    @property
    def n_inputs(self) -> int:
        return len(self.features)

    @property
    def hidden_sizes(self) -> list[int]:
        return [layer.weights.shape[0] for layer in self.layers[:-1]]

    @property
    def n_outputs(self) -> int:
        return len(self.classes)

    def layer_sizes(self) -> list[int]:
        return [self.n_inputs, *self.hidden_sizes, self.n_outputs]


@dataclass(frozen=True, eq=False)
class Instance:
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)


def make_instance(features: list[FeatureSpec], values) -> Instance:
    """Validate a point against the feature domains."""
    arr = np.asarray(values, dtype=float)
    if arr.shape != (len(features),):
        raise ValidationError(f"instance has {arr.size} values, expected {len(features)}")
    for f, v in zip(features, arr):
        if not math.isfinite(v):
            raise ValidationError(f"feature {f.name!r}: non-finite value")
        if v < f.lower or v > f.upper:
            raise ValidationError(f"feature {f.name!r}: value {v} outside [{f.lower}, {f.upper}]")
        if f.kind in ("integer", "binary") and v != int(v):
            raise ValidationError(f"feature {f.name!r}: value {v} must be integral")
    return Instance(arr)


# -- semantics ---------------------------------------------------------------


def forward(ann: Ann, point: Instance) -> tuple[list[np.ndarray], np.ndarray]:
    """Hidden activations max(0, W x + b) per layer, plus raw logits."""
    x = point.values
    activations = []
    for layer in ann.layers[:-1]:
        x = np.maximum(0.0, layer.weights @ x + layer.bias)
        activations.append(x)
    last = ann.layers[-1]
    logits = last.weights @ x + last.bias
    return activations, logits


def preactivations(ann: Ann, point: Instance) -> list[np.ndarray]:
    """Per hidden layer, the affine values before ReLU clipping."""
    x = point.values
    pre = []
    for layer in ann.layers[:-1]:
        z = layer.weights @ x + layer.bias
        pre.append(z)
        x = np.maximum(0.0, z)
    return pre


def predict(ann: Ann, point: Instance) -> int:
    _, logits = forward(ann, point)
    return int(np.argmax(logits))


def prediction_margin(ann: Ann, point: Instance) -> float:
    """Logit lead of the predicted class over its best rival (0 on a tie)."""
    _, logits = forward(ann, point)
    if logits.size < 2:
        return math.inf
    order = np.sort(logits)
    return float(order[-1] - order[-2])


# -- model file --------------------------------------------------------------


def load_model(text: str) -> Ann:
    """Parse and validate a model document; diagnostics name the bad field."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("model file must be a JSON object")
    for key in ("name", "features", "layers", "classes"):
        if key not in doc:
            raise ValidationError(f"model file missing field {key!r}")
    features = []
    for i, f in enumerate(doc["features"]):
        if not isinstance(f, dict):
            raise ValidationError(f"features[{i}]: expected an object")
        try:
            features.append(
                FeatureSpec(
                    str(f["name"]), str(f["kind"]), float(f["lower"]), float(f["upper"])
                )
            )
        except KeyError as exc:
            raise ValidationError(f"features[{i}]: missing {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"features[{i}]: {exc}") from exc
    layers = []
    for l, layer in enumerate(doc["layers"]):
        if not isinstance(layer, dict) or "weights" not in layer or "bias" not in layer:
            raise ValidationError(f"layers[{l}]: expected an object with weights and bias")
        try:
            w = np.array(layer["weights"], dtype=float)
            b = np.array(layer["bias"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"layers[{l}]: non-numeric entry ({exc})") from exc
        if w.ndim != 2:
            raise ValidationError(f"layers[{l}].weights: rows have uneven lengths")
        layers.append(Layer(w, b))
    classes = [str(c) for c in doc["classes"]]
    return Ann(str(doc["name"]), features, layers, classes)


def dump_model(ann: Ann) -> str:
    doc = {
        "name": ann.name,
        "features": [
            {"name": f.name, "kind": f.kind, "lower": f.lower, "upper": f.upper}
            for f in ann.features
        ],
        "layers": [
            {"weights": [[float(w) for w in row] for row in layer.weights],
             "bias": [float(b) for b in layer.bias]}
            for layer in ann.layers
        ],
        "classes": list(ann.classes),
    }
    return json.dumps(doc, indent=2) + "\n"


def model_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# -- dataset files -------------------------------------------------------------


def parse_dataset(text: str, ann: Ann) -> list[Instance]:
    """Read a delimited dataset whose header matches the model's feature names
    (an optional trailing `label` column is ignored; predictions always come
    from `forward`)."""
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise ValidationError("dataset is empty")
    header = [h.strip() for h in rows[0]]
    names = [f.name for f in ann.features]
    expected = names if header == names else names + ["label"]
    if header != expected:
        raise ValidationError(
            f"dataset header {header} does not match model features {names}"
        )
    instances = []
    for ln, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValidationError(f"dataset line {ln}: expected {len(header)} cells")
        try:
            values = [float(cell) for cell in row[: len(names)]]
        except ValueError as exc:
            raise ValidationError(f"dataset line {ln}: {exc}") from exc
        instances.append(make_instance(ann.features, values))
    return instances


# -- raw-table preprocessing ---------------------------------------------------

CONTINUOUS_COL = "continuous"
INTEGER_COL = "integer"
CATEGORICAL_COL = "categorical"

COLUMN_KINDS = (CONTINUOUS_COL, INTEGER_COL, CATEGORICAL_COL)


@dataclass
class ColumnTransform:
    column: str
    kind: str
    # min-max parameters for continuous columns
    minimum: float | None = None
    span: float | None = None
    # category order (first appearance) for categorical columns
    categories: list[str] = field(default_factory=list)


@dataclass
class Preprocessed:
    features: list[FeatureSpec]
    instances: list[Instance]
    transforms: list[ColumnTransform]
    labels: list[str] | None = None


def preprocess_dataset(table: list[list[str]], schema: dict[str, str]) -> Preprocessed:
    """Expand categoricals to one-hot binaries, min-max scale continuous
    columns to [0, 1], and leave integer columns untouched so their domains
    stay discrete. `table[0]` is the header; a `label` column is carried
    through unmodified."""
    if not table or len(table) < 2:
        raise ValidationError("table needs a header row and at least one data row")
    header = [h.strip() for h in table[0]]
    rows = table[1:]
    for row in rows:
        if len(row) != len(header):
            raise ValidationError("ragged table: row length differs from header")

    label_idx = header.index("label") if "label" in header else None
    for name in header:
        if name != "label" and name not in schema:
            raise ValidationError(f"column {name!r} missing from the schema")
        if name != "label" and schema[name] not in COLUMN_KINDS:
            raise ValidationError(f"column {name!r}: unknown kind {schema[name]!r}")

    features: list[FeatureSpec] = []
    transforms: list[ColumnTransform] = []
    columns: list[list[float]] = []

    for idx, name in enumerate(header):
        if idx == label_idx:
            continue
        raw = [row[idx].strip() for row in rows]
        kind = schema[name]
        if kind == CATEGORICAL_COL:
            seen: list[str] = []
            for cell in raw:
                if cell not in seen:
                    seen.append(cell)
            transforms.append(ColumnTransform(name, kind, categories=seen))
            for cat in seen:
                features.append(FeatureSpec(f"{name}={cat}", "binary", 0.0, 1.0))
                columns.append([1.0 if cell == cat else 0.0 for cell in raw])
            continue
        try:
            numeric = [float(cell) for cell in raw]
        except ValueError as exc:
            raise ValidationError(f"column {name!r}: non-numeric value ({exc})") from exc
        if kind == INTEGER_COL:
            for v in numeric:
                if v != int(v):
                    raise ValidationError(f"column {name!r}: non-integral value {v}")
            lo, hi = min(numeric), max(numeric)
            features.append(FeatureSpec(name, "integer", lo, hi))
            transforms.append(ColumnTransform(name, kind))
            columns.append(numeric)
        else:
            lo, hi = min(numeric), max(numeric)
            span = hi - lo
            if span == 0.0:
                # Constant column: every value maps to 0, domain stays [0, 1].
                scaled = [0.0 for _ in numeric]
            else:
                scaled = [(v - lo) / span for v in numeric]
            features.append(FeatureSpec(name, "continuous", 0.0, 1.0))
            transforms.append(ColumnTransform(name, kind, minimum=lo, span=span))
            columns.append(scaled)

    matrix = np.array(columns, dtype=float).T
    instances = [make_instance(features, row) for row in matrix]
    labels = [row[label_idx].strip() for row in rows] if label_idx is not None else None
    return Preprocessed(features, instances, transforms, labels)
